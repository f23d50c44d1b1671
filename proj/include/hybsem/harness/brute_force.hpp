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

#ifndef HYBSEM_HARNESS_BRUTE_FORCE_HPP
#define HYBSEM_HARNESS_BRUTE_FORCE_HPP

#include <cmath>
#include <vector>

#include <Eigen/Core>

#include "hybsem/hybrid_belief.hpp"
#include "hybsem/hypothesis.hpp"
#include "hybsem/numeric.hpp"
#include "hybsem/scenario.hpp"

// Enumeration oracles over the full hypothesis space. Exponential by design.

namespace hybsem::oracle {

/// log sum_C prod_n exp(table(n, c_n)), summing hypotheses one by one.
inline double log_sum_over_hypotheses(const Eigen::MatrixXd& log_table) {
  const HypothesisCodec codec{static_cast<int>(log_table.rows()), static_cast<int>(log_table.cols())};
  std::vector<double> terms;
  terms.reserve(codec.size());
  Hypothesis h;
  h.classes.assign(static_cast<std::size_t>(codec.n_objects()), 0);
  do {
    double s = 0.0;
    for (int n = 0; n < codec.n_objects(); ++n) {
      s += log_table(n, h[n]);
    }
    terms.push_back(s);
  } while (codec.next(h));
  return log_sum_exp(terms);
}

/// log b~[C, X] = log b^g[X] + sum_n log b~[c_n | X].
inline double log_joint(const HybridBelief& belief, const Hypothesis& h, const Eigen::VectorXd& x) {
  double s = belief.geometric().log_density(x);
  for (int n = 0; n < belief.n_objects(); ++n) {
    s += belief.class_log_unnormalized(n, x)[h[n]];
  }
  return s;
}

/// log sum_C b~[C, X] by enumeration.
inline double log_marginal(const HybridBelief& belief, const Eigen::VectorXd& x) {
  return belief.geometric().log_density(x) + log_sum_over_hypotheses(belief.class_log_table(x));
}

/// log b~[c | X] from individual likelihood calls, without the sufficient-statistic shortcut.
inline double class_log_direct(const HybridBelief& belief, int n, int c, const Eigen::VectorXd& x) {
  const auto& idx = belief.index();
  const Vec2 obj = x.segment<2>(idx.object(n).offset);
  double s = belief.log_class_prior(n, x)[c];
  for (const auto& r : belief.records(n)) {
    s += semantic_log_likelihood(r.z, x.segment<2>(idx.pose(r.time).offset), obj, c, belief.scenario());
  }
  return s;
}

/// Enumerated b[C | X] over the codec order.
inline std::vector<double> hypothesis_posterior(const HybridBelief& belief, const Eigen::VectorXd& x) {
  const auto codec = belief.scenario().codec();
  const Eigen::MatrixXd table = belief.class_log_table(x);
  std::vector<double> lw;
  lw.reserve(codec.size());
  Hypothesis h;
  h.classes.assign(static_cast<std::size_t>(codec.n_objects()), 0);
  do {
    double s = 0.0;
    for (int n = 0; n < codec.n_objects(); ++n) {
      s += table(n, h[n]);
    }
    lw.push_back(s);
  } while (codec.next(h));
  return normalize_log_weights(lw);
}

}  // namespace hybsem::oracle

#endif  // HYBSEM_HARNESS_BRUTE_FORCE_HPP
