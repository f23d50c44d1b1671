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

#ifndef HYBSEM_GAUSSIAN_FACTOR_GRAPH_HPP
#define HYBSEM_GAUSSIAN_FACTOR_GRAPH_HPP

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "hybsem/numeric.hpp"
#include "hybsem/random.hpp"

/**
 * \file
 * \brief Exact linear-Gaussian inference over a stacked state vector.
 *
 * The stacked state is `X = (x^o_0, ..., x^o_{N-1}, x_0, x_1, ..., x_k)`.
 * Objects come first so that appending a pose never moves an existing slot,
 * and the initial state `X_0 = (X^o, x_0)` is always a prefix of `X`.
 *
 * Factors are kept in information form. Alongside the information matrix and
 * vector the graph accumulates the two scalars needed for the closed-form
 * log-evidence, so `log_evidence()` equals the log of the integral of the
 * product of all factor densities.
 */

namespace hybsem {

/// Contiguous coordinate range of one slot inside the stacked vector.
struct Block {
  int offset{0};
  int size{0};
};

/// Maps semantic slots (object n, pose at time t) to coordinate offsets.
class StackedIndex {
 public:
  explicit StackedIndex(int n_objects = 0, int slot_dim = 2) : n_objects_{n_objects}, slot_dim_{slot_dim} {
    if (n_objects < 0 || slot_dim < 1) {
      throw std::invalid_argument("StackedIndex: need n_objects >= 0 and slot_dim >= 1");
    }
  }

  [[nodiscard]] int n_objects() const { return n_objects_; }
  [[nodiscard]] int slot_dim() const { return slot_dim_; }
  [[nodiscard]] int pose_count() const { return pose_count_; }
  [[nodiscard]] int dimension() const { return slot_dim_ * (n_objects_ + pose_count_); }

  [[nodiscard]] Block object(int n) const {
    if (n < 0 || n >= n_objects_) {
      throw std::out_of_range("StackedIndex: object index out of range");
    }
    return {slot_dim_ * n, slot_dim_};
  }

  [[nodiscard]] Block pose(int t) const {
    if (t < 0 || t >= pose_count_) {
      throw std::out_of_range("StackedIndex: pose index out of range");
    }
    return {slot_dim_ * (n_objects_ + t), slot_dim_};
  }

  /// Appends the next pose slot and returns its time index.
  int append_pose() { return pose_count_++; }

  /// Human-readable slot name of a coordinate.
  [[nodiscard]] std::string describe(int coordinate) const {
    const int slot = coordinate / slot_dim_;
    const std::string axis = std::to_string(coordinate % slot_dim_);
    if (slot < n_objects_) {
      return "object " + std::to_string(slot) + " (axis " + axis + ")";
    }
    return "pose " + std::to_string(slot - n_objects_) + " (axis " + axis + ")";
  }

 private:
  int n_objects_;
  int slot_dim_;
  int pose_count_{0};
};

class SingularSystemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Frozen Gaussian posterior N(mean, information^-1).
/**
 * Immutable once built; safe to share between threads, each with its own RNG.
 */
class GaussianPosterior {
 public:
  GaussianPosterior() = default;

  GaussianPosterior(Eigen::VectorXd mean, Eigen::LLT<Eigen::MatrixXd> information_factor)
      : mean_{std::move(mean)}, llt_{std::move(information_factor)} {
    const auto& l = llt_.matrixLLT();
    log_det_information_ = 0.0;
    for (Eigen::Index i = 0; i < l.rows(); ++i) {
      log_det_information_ += 2.0 * std::log(l(i, i));
    }
  }

  [[nodiscard]] int dimension() const { return static_cast<int>(mean_.size()); }
  [[nodiscard]] const Eigen::VectorXd& mean() const { return mean_; }
  [[nodiscard]] double log_det_information() const { return log_det_information_; }
  [[nodiscard]] const Eigen::LLT<Eigen::MatrixXd>& information_factor() const { return llt_; }

  [[nodiscard]] Eigen::MatrixXd covariance() const {
    Eigen::MatrixXd cov = llt_.solve(Eigen::MatrixXd::Identity(mean_.size(), mean_.size()));
    return 0.5 * (cov + cov.transpose());
  }

  /// Covariance block between two coordinate ranges.
  [[nodiscard]] Eigen::MatrixXd covariance_columns(Block columns) const {
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(mean_.size(), columns.size);
    for (int i = 0; i < columns.size; ++i) {
      e(columns.offset + i, i) = 1.0;
    }
    return llt_.solve(e);
  }

  /// Normalized log-density.
  [[nodiscard]] double log_density(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd r = x - mean_;
    const Eigen::VectorXd u = llt_.matrixU() * r;
    return -0.5 * static_cast<double>(mean_.size()) * kLog2Pi + 0.5 * log_det_information_ - 0.5 * u.squaredNorm();
  }

  /// Maps a standard-normal vector to a posterior draw: mean + L^-T e.
  [[nodiscard]] Eigen::VectorXd transform(const Eigen::VectorXd& standard) const {
    return mean_ + llt_.matrixU().solve(standard);
  }

  [[nodiscard]] Eigen::VectorXd sample(Rng& rng) const { return transform(standard_normal_vector(rng, mean_.size())); }

  [[nodiscard]] std::vector<Eigen::VectorXd> sample(Rng& rng, int count) const {
    std::vector<Eigen::VectorXd> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
      out.push_back(sample(rng));
    }
    return out;
  }

 private:
  Eigen::VectorXd mean_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double log_det_information_{0.0};
};

/// Accumulates linear-Gaussian factors z = A X_slots + b + e, e ~ N(0, R).
class GaussianFactorGraph {
 public:
  explicit GaussianFactorGraph(StackedIndex index = StackedIndex{})
      : index_{std::move(index)},
        information_{Eigen::MatrixXd::Zero(index_.dimension(), index_.dimension())},
        vector_{Eigen::VectorXd::Zero(index_.dimension())} {}

  [[nodiscard]] const StackedIndex& index() const { return index_; }
  [[nodiscard]] int dimension() const { return index_.dimension(); }
  [[nodiscard]] int factor_count() const { return factor_count_; }
  [[nodiscard]] const Eigen::MatrixXd& information_matrix() const { return information_; }
  [[nodiscard]] const Eigen::VectorXd& information_vector() const { return vector_; }

  /// Appends a pose slot (zero information) and returns its time index.
  int add_pose() {
    const int t = index_.append_pose();
    const Eigen::Index d = index_.dimension();
    const Eigen::Index old = information_.rows();
    information_.conservativeResize(d, d);
    information_.rightCols(d - old).setZero();
    information_.bottomRows(d - old).setZero();
    vector_.conservativeResize(d);
    vector_.tail(d - old).setZero();
    return t;
  }

  /// Gaussian prior N(mean, covariance) on one slot.
  void add_prior(Block slot, const Eigen::VectorXd& mean, const Eigen::MatrixXd& covariance) {
    const Block blocks[] = {slot};
    add_linear_factor(blocks, Eigen::MatrixXd::Identity(slot.size, slot.size), Eigen::VectorXd::Zero(slot.size),
                      covariance, mean);
  }

  /// Folds the observation z = A X_blocks + b + e, e ~ N(0, R) into the graph.
  void add_linear_factor(std::span<const Block> blocks, const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                         const Eigen::MatrixXd& noise, const Eigen::VectorXd& z) {
    int cols = 0;
    for (const auto& blk : blocks) {
      if (blk.offset < 0 || blk.offset + blk.size > dimension()) {
        throw std::out_of_range("GaussianFactorGraph: block outside the stacked state");
      }
      cols += blk.size;
    }
    const Eigen::Index m = z.size();
    if (a.cols() != cols || a.rows() != m || b.size() != m || noise.rows() != m || noise.cols() != m) {
      throw std::invalid_argument("GaussianFactorGraph: factor dimension mismatch");
    }
    const Eigen::LLT<Eigen::MatrixXd> noise_llt(noise);
    if (noise_llt.info() != Eigen::Success || !noise.isApprox(noise.transpose())) {
      throw std::invalid_argument("GaussianFactorGraph: noise covariance must be symmetric positive definite");
    }
    const Eigen::MatrixXd rinv_a = noise_llt.solve(a);
    const Eigen::VectorXd residual = z - b;
    const Eigen::VectorXd rinv_r = noise_llt.solve(residual);
    const Eigen::MatrixXd local_info = a.transpose() * rinv_a;
    const Eigen::VectorXd local_vec = a.transpose() * rinv_r;

    int row = 0;
    for (const auto& bi : blocks) {
      int col = 0;
      for (const auto& bj : blocks) {
        information_.block(bi.offset, bj.offset, bi.size, bj.size) += local_info.block(row, col, bi.size, bj.size);
        col += bj.size;
      }
      vector_.segment(bi.offset, bi.size) += local_vec.segment(row, bi.size);
      row += bi.size;
    }

    double log_det_noise = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      log_det_noise += 2.0 * std::log(noise_llt.matrixLLT()(i, i));
    }
    quadratic_ += residual.dot(rinv_r);
    normalizer_ += static_cast<double>(m) * kLog2Pi + log_det_noise;
    ++factor_count_;
  }

  /// Adds every factor of `other` with its linear map scaled by `gain`.
  /**
   * Valid when all of `other`'s factors have zero offset: the information
   * matrix scales with gain^2, the information vector with gain, and the
   * evidence scalars are unchanged.
   */
  void accumulate_scaled(const GaussianFactorGraph& other, double gain) {
    if (other.dimension() != dimension()) {
      throw std::invalid_argument("GaussianFactorGraph::accumulate_scaled: dimension mismatch");
    }
    information_.noalias() += (gain * gain) * other.information_;
    vector_.noalias() += gain * other.vector_;
    quadratic_ += other.quadratic_;
    normalizer_ += other.normalizer_;
    factor_count_ += other.factor_count_;
  }

  /// Freezes the posterior; throws SingularSystemError naming unsupported slots.
  [[nodiscard]] GaussianPosterior posterior() const {
    Eigen::LLT<Eigen::MatrixXd> llt(information_);
    if (llt.info() != Eigen::Success) {
      std::string unsupported;
      for (Eigen::Index i = 0; i < information_.rows(); ++i) {
        if (information_(i, i) <= 0.0) {
          unsupported += (unsupported.empty() ? "" : ", ") + index_.describe(static_cast<int>(i));
        }
      }
      throw SingularSystemError("GaussianFactorGraph: information matrix is not positive definite" +
                                (unsupported.empty() ? std::string{} : "; unsupported slots: " + unsupported));
    }
    Eigen::VectorXd mean = llt.solve(vector_);
    return GaussianPosterior{std::move(mean), std::move(llt)};
  }

  [[nodiscard]] std::pair<Eigen::VectorXd, Eigen::MatrixXd> posterior_moments() const {
    const auto post = posterior();
    return {post.mean(), post.covariance()};
  }

  /// log of the integral over X of the product of all factor densities.
  [[nodiscard]] double log_evidence() const { return log_evidence(posterior()); }

  /// Same as log_evidence(), reusing an already frozen posterior of this graph.
  [[nodiscard]] double log_evidence(const GaussianPosterior& post) const {
    const double d = static_cast<double>(dimension());
    return -0.5 * quadratic_ - 0.5 * normalizer_ + 0.5 * d * kLog2Pi - 0.5 * post.log_det_information() +
           0.5 * vector_.dot(post.mean());
  }

 private:
  StackedIndex index_;
  Eigen::MatrixXd information_;
  Eigen::VectorXd vector_;
  double quadratic_{0.0};
  double normalizer_{0.0};
  int factor_count_{0};
};

}  // namespace hybsem

#endif  // HYBSEM_GAUSSIAN_FACTOR_GRAPH_HPP
