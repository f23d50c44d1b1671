// Copyright 2026 The hybsem Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "hybsem/gaussian_factor_graph.hpp"
#include "hybsem/random.hpp"
#include "test_support.hpp"

namespace hybsem {
namespace {

Eigen::VectorXd vec1(double v) { return Eigen::VectorXd::Constant(1, v); }
Eigen::MatrixXd mat1(double v) { return Eigen::MatrixXd::Constant(1, 1, v); }

GaussianFactorGraph scalar_graph() {
  GaussianFactorGraph g{StackedIndex{0, 1}};
  g.add_pose();
  return g;
}

TEST(StackedIndex, ObjectsFirstThenPoses) {
  StackedIndex idx{3};
  idx.append_pose();
  idx.append_pose();
  EXPECT_EQ(idx.dimension(), 10);
  EXPECT_EQ(idx.object(0).offset, 0);
  EXPECT_EQ(idx.object(2).offset, 4);
  EXPECT_EQ(idx.pose(0).offset, 6);
  EXPECT_EQ(idx.pose(1).offset, 8);
  idx.append_pose();
  EXPECT_EQ(idx.pose(1).offset, 8);
  EXPECT_THROW((void)idx.pose(3), std::out_of_range);
  EXPECT_THROW((void)idx.object(3), std::out_of_range);
}

TEST(GaussianFactorGraph, PriorOnlyPosterior) {
  GaussianFactorGraph g{StackedIndex{0}};
  g.add_pose();
  g.add_prior(g.index().pose(0), Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity());
  const auto [mean, cov] = g.posterior_moments();
  EXPECT_LT(mean.norm(), 1e-15);
  EXPECT_LT((cov - Eigen::Matrix2d::Identity()).norm(), 1e-14);
}

TEST(GaussianFactorGraph, TwoPriorsAddPrecision) {
  auto g = scalar_graph();
  g.add_prior(g.index().pose(0), vec1(0.0), mat1(1.0));
  g.add_prior(g.index().pose(0), vec1(0.0), mat1(1.0));
  const auto [mean, cov] = g.posterior_moments();
  EXPECT_NEAR(mean(0), 0.0, 1e-15);
  EXPECT_NEAR(cov(0, 0), 0.5, 1e-15);
}

TEST(GaussianFactorGraph, PriorNeverLowersMarginalPrecision) {
  Rng rng = make_rng(3, 0, Stream::kReference);
  GaussianFactorGraph g{StackedIndex{2}};
  g.add_pose();
  g.add_prior(g.index().object(0), Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity());
  g.add_prior(g.index().object(1), Eigen::Vector2d::Ones(), 2.0 * Eigen::Matrix2d::Identity());
  g.add_prior(g.index().pose(0), Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity());
  const Block blocks[] = {g.index().object(0), g.index().pose(0)};
  Eigen::MatrixXd a(2, 4);
  a << Eigen::Matrix2d::Identity(), -Eigen::Matrix2d::Identity();
  g.add_linear_factor(blocks, a, Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity(), Eigen::Vector2d{1.0, 2.0});
  Eigen::MatrixXd before = g.posterior().covariance();
  for (int step = 0; step < 3; ++step) {
    g.add_prior(g.index().object(step % 2), standard_normal_vector(rng, 2), (0.5 + step) * Eigen::Matrix2d::Identity());
    const Eigen::MatrixXd after = g.posterior().covariance();
    for (Eigen::Index i = 0; i < after.rows(); ++i) {
      EXPECT_LE(after(i, i), before(i, i) + 1e-14);
    }
    before = after;
  }
}

TEST(GaussianFactorGraph, ConjugateScalarUpdate) {
  auto g = scalar_graph();
  g.add_prior(g.index().pose(0), vec1(0.0), mat1(1.0));
  const Block blocks[] = {g.index().pose(0)};
  g.add_linear_factor(blocks, mat1(1.0), vec1(0.0), mat1(1.0), vec1(2.0));
  const auto [mean, cov] = g.posterior_moments();
  EXPECT_NEAR(mean(0), 1.0, 1e-15);
  EXPECT_NEAR(cov(0, 0), 0.5, 1e-15);
}

TEST(GaussianFactorGraph, ScalarLogEvidenceMatchesClosedFormAndQuadrature) {
  auto g = scalar_graph();
  g.add_prior(g.index().pose(0), vec1(0.0), mat1(1.0));
  const Block blocks[] = {g.index().pose(0)};
  g.add_linear_factor(blocks, mat1(1.0), vec1(0.0), mat1(1.0), vec1(2.0));
  const double closed = -0.5 * std::log(2.0 * M_PI * 2.0) - 1.0;
  EXPECT_NEAR(g.log_evidence(), closed, 1e-14);

  // Simpson's rule over the product of the two densities.
  const int n = 4000;
  const double lo = -15.0;
  const double hi = 15.0;
  const double h = (hi - lo) / n;
  double total = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double x = lo + i * h;
    const double f = std::exp(-0.5 * x * x - 0.5 * (2.0 - x) * (2.0 - x)) / (2.0 * M_PI);
    total += f * (i == 0 || i == n ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0));
  }
  EXPECT_NEAR(g.log_evidence(), std::log(total * h / 3.0), 1e-10);
}

TEST(GaussianFactorGraph, RejectsBadFactors) {
  auto g = scalar_graph();
  const Block blocks[] = {g.index().pose(0)};
  EXPECT_THROW(g.add_linear_factor(blocks, mat1(1.0), vec1(0.0), mat1(0.0), vec1(2.0)), std::invalid_argument);
  EXPECT_THROW(g.add_linear_factor(blocks, Eigen::MatrixXd::Ones(1, 2), vec1(0.0), mat1(1.0), vec1(2.0)),
               std::invalid_argument);
  const Block outside[] = {Block{1, 1}};
  EXPECT_THROW(g.add_linear_factor(outside, mat1(1.0), vec1(0.0), mat1(1.0), vec1(2.0)), std::out_of_range);
}

TEST(GaussianFactorGraph, SingularSystemNamesUnsupportedSlot) {
  GaussianFactorGraph g{StackedIndex{1}};
  g.add_pose();
  g.add_prior(g.index().pose(0), Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity());
  try {
    (void)g.posterior();
    FAIL() << "expected SingularSystemError";
  } catch (const SingularSystemError& e) {
    EXPECT_NE(std::string{e.what()}.find("object 0"), std::string::npos) << e.what();
  }
}

TEST(GaussianFactorGraph, ChainedTransitionsGrowCovariance) {
  constexpr double kProcess = 0.3;
  GaussianFactorGraph g{StackedIndex{0}};
  g.add_pose();
  g.add_prior(g.index().pose(0), Eigen::Vector2d::Zero(), 0.01 * Eigen::Matrix2d::Identity());
  Eigen::MatrixXd step(2, 4);
  step << -Eigen::Matrix2d::Identity(), Eigen::Matrix2d::Identity();
  for (int t = 1; t <= 5; ++t) {
    g.add_pose();
    const Block blocks[] = {g.index().pose(t - 1), g.index().pose(t)};
    g.add_linear_factor(blocks, step, Eigen::Vector2d::Zero(), kProcess * Eigen::Matrix2d::Identity(),
                        Eigen::Vector2d{1.0, 0.5});
    const auto [mean, cov] = g.posterior_moments();
    const Block last = g.index().pose(t);
    EXPECT_NEAR(mean(last.offset), t * 1.0, 1e-12);
    EXPECT_NEAR(mean(last.offset + 1), t * 0.5, 1e-12);
    const Eigen::Matrix2d block = cov.block(last.offset, last.offset, 2, 2);
    EXPECT_LT((block - (0.01 + kProcess * t) * Eigen::Matrix2d::Identity()).norm(), 1e-12);
  }
  // A chain of pure transitions integrates to exactly one.
  EXPECT_NEAR(g.log_evidence(), 0.0, 1e-12);
}

/// Random linear-Gaussian system: block prior on 3 slots of size 2, then 4 observations of random slot pairs.
struct DenseSystem {
  GaussianFactorGraph graph{StackedIndex{2}};
  Eigen::VectorXd prior_mean;
  Eigen::MatrixXd prior_cov;
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  Eigen::MatrixXd r;
  Eigen::VectorXd z;
};

Eigen::MatrixXd random_spd(Rng& rng, int n) {
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      m(i, j) = standard_normal(rng);
    }
  }
  return m * m.transpose() / n + 0.3 * Eigen::MatrixXd::Identity(n, n);
}

DenseSystem random_system(Rng& rng) {
  DenseSystem sys;
  sys.graph.add_pose();
  const int d = sys.graph.dimension();
  sys.prior_mean = Eigen::VectorXd::Zero(d);
  sys.prior_cov = Eigen::MatrixXd::Zero(d, d);
  for (int s = 0; s < 3; ++s) {
    const Block slot{2 * s, 2};
    const Eigen::VectorXd m = 3.0 * standard_normal_vector(rng, 2);
    const Eigen::MatrixXd c = random_spd(rng, 2);
    sys.graph.add_prior(slot, m, c);
    sys.prior_mean.segment(slot.offset, 2) = m;
    sys.prior_cov.block(slot.offset, slot.offset, 2, 2) = c;
  }
  constexpr int kFactors = 4;
  sys.a = Eigen::MatrixXd::Zero(2 * kFactors, d);
  sys.b = Eigen::VectorXd::Zero(2 * kFactors);
  sys.r = Eigen::MatrixXd::Zero(2 * kFactors, 2 * kFactors);
  sys.z = Eigen::VectorXd::Zero(2 * kFactors);
  for (int f = 0; f < kFactors; ++f) {
    const int i = f % 3;
    const int j = (f + 1) % 3;
    const Block blocks[] = {Block{2 * i, 2}, Block{2 * j, 2}};
    Eigen::MatrixXd local(2, 4);
    for (int u = 0; u < 2; ++u) {
      for (int v = 0; v < 4; ++v) {
        local(u, v) = standard_normal(rng);
      }
    }
    const Eigen::VectorXd off = standard_normal_vector(rng, 2);
    const Eigen::MatrixXd noise = random_spd(rng, 2);
    const Eigen::VectorXd z = 2.0 * standard_normal_vector(rng, 2);
    sys.graph.add_linear_factor(blocks, local, off, noise, z);
    sys.a.block(2 * f, 2 * i, 2, 2) = local.leftCols(2);
    sys.a.block(2 * f, 2 * j, 2, 2) += local.rightCols(2);
    sys.b.segment(2 * f, 2) = off;
    sys.r.block(2 * f, 2 * f, 2, 2) = noise;
    sys.z.segment(2 * f, 2) = z;
  }
  return sys;
}

TEST(GaussianFactorGraph, MatchesDenseOracle) {
  Rng rng = make_rng(17, 0, Stream::kReference);
  for (int rep = 0; rep < 20; ++rep) {
    const DenseSystem sys = random_system(rng);
    const Eigen::MatrixXd p0_inv = sys.prior_cov.inverse();
    const Eigen::MatrixXd r_inv = sys.r.inverse();
    const Eigen::MatrixXd cov = (p0_inv + sys.a.transpose() * r_inv * sys.a).inverse();
    const Eigen::VectorXd mean = cov * (p0_inv * sys.prior_mean + sys.a.transpose() * r_inv * (sys.z - sys.b));
    const Eigen::MatrixXd marginal_cov = sys.a * sys.prior_cov * sys.a.transpose() + sys.r;
    const double evidence = testing::dense_log_normal(sys.z, sys.a * sys.prior_mean + sys.b, marginal_cov);

    const auto post = sys.graph.posterior();
    const Eigen::MatrixXd got_cov = post.covariance();
    EXPECT_LT((post.mean() - mean).norm(), 1e-8);
    EXPECT_LT((got_cov - cov).norm(), 1e-8);
    EXPECT_LT((got_cov - got_cov.transpose()).norm(), 1e-10);
    EXPECT_NEAR(sys.graph.log_evidence(), evidence, 1e-8);

    const Eigen::VectorXd x = mean + standard_normal_vector(rng, mean.size());
    EXPECT_NEAR(post.log_density(x), testing::dense_log_normal(x, mean, cov), 1e-8);
  }
}

TEST(GaussianFactorGraph, SamplesMatchMoments) {
  Rng rng = make_rng(23, 0, Stream::kReference);
  const DenseSystem sys = random_system(rng);
  const auto post = sys.graph.posterior();
  const Eigen::MatrixXd cov = post.covariance();
  constexpr int kDraws = 40000;
  const auto draws = post.sample(rng, kDraws);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(post.dimension());
  for (const auto& x : draws) {
    mean += x;
  }
  mean /= kDraws;
  Eigen::MatrixXd emp = Eigen::MatrixXd::Zero(post.dimension(), post.dimension());
  for (const auto& x : draws) {
    emp += (x - mean) * (x - mean).transpose();
  }
  emp /= kDraws - 1;
  for (int i = 0; i < post.dimension(); ++i) {
    const double se = std::sqrt(cov(i, i) / kDraws);
    EXPECT_NEAR(mean(i), post.mean()(i), 4.0 * se);
    EXPECT_NEAR(emp(i, i), cov(i, i), 4.0 * cov(i, i) * std::sqrt(2.0 / kDraws));
  }
}

TEST(GaussianFactorGraph, AccumulateScaledEqualsScaledFactor) {
  Rng rng = make_rng(29, 0, Stream::kReference);
  const StackedIndex idx = [] {
    StackedIndex i{1};
    i.append_pose();
    return i;
  }();
  Eigen::MatrixXd diff(2, 4);
  diff << Eigen::Matrix2d::Identity(), -Eigen::Matrix2d::Identity();
  const Block blocks[] = {idx.object(0), idx.pose(0)};
  const Eigen::VectorXd z = standard_normal_vector(rng, 2);
  constexpr double kGain = 1.37;

  GaussianFactorGraph base{idx};
  base.add_prior(idx.object(0), Eigen::Vector2d{1.0, 2.0}, Eigen::Matrix2d::Identity());
  base.add_prior(idx.pose(0), Eigen::Vector2d::Zero(), 0.5 * Eigen::Matrix2d::Identity());

  GaussianFactorGraph unit{idx};
  unit.add_linear_factor(blocks, diff, Eigen::Vector2d::Zero(), 5.0 * Eigen::Matrix2d::Identity(), z);
  GaussianFactorGraph via_scale = base;
  via_scale.accumulate_scaled(unit, kGain);

  GaussianFactorGraph direct = base;
  direct.add_linear_factor(blocks, kGain * diff, Eigen::Vector2d::Zero(), 5.0 * Eigen::Matrix2d::Identity(), z);

  EXPECT_LT((via_scale.information_matrix() - direct.information_matrix()).norm(), 1e-12);
  EXPECT_LT((via_scale.information_vector() - direct.information_vector()).norm(), 1e-12);
  EXPECT_NEAR(via_scale.log_evidence(), direct.log_evidence(), 1e-12);
  EXPECT_EQ(via_scale.factor_count(), direct.factor_count());
}

}  // namespace
}  // namespace hybsem
