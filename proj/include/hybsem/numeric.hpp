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

#ifndef HYBSEM_NUMERIC_HPP
#define HYBSEM_NUMERIC_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "hybsem/random.hpp"

namespace hybsem {

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;  // log(2 pi)
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// log(sum(exp(values))), -inf for an empty or all -inf range.
inline double log_sum_exp(std::span<const double> values) {
  if (values.empty()) {
    return kNegInf;
  }
  const double max = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(max)) {
    return max;
  }
  double sum = 0.0;
  for (const double v : values) {
    sum += std::exp(v - max);
  }
  return max + std::log(sum);
}

/// Self-normalizes log-weights in log-space.
/**
 * Throws std::domain_error when every weight is -inf, since no normalized
 * distribution exists in that case.
 */
inline std::vector<double> normalize_log_weights(std::span<const double> log_weights) {
  const double total = log_sum_exp(log_weights);
  if (!std::isfinite(total)) {
    throw std::domain_error("normalize_log_weights: all weights are zero or non-finite");
  }
  std::vector<double> out(log_weights.size());
  std::transform(log_weights.begin(), log_weights.end(), out.begin(),
                 [total](double lw) { return std::exp(lw - total); });
  return out;
}

/// Effective sample size 1 / sum(w_i^2) of normalized weights.
inline double effective_sample_size(std::span<const double> weights) {
  double sum_sq = 0.0;
  for (const double w : weights) {
    sum_sq += w * w;
  }
  return sum_sq > 0.0 ? 1.0 / sum_sq : 0.0;
}

/// Draws an index from a (possibly unnormalized) non-negative weight vector.
template <class Weights>
int sample_categorical(const Weights& weights, Rng& rng) {
  double total = 0.0;
  for (const double w : weights) {
    total += w;
  }
  const double u = uniform01(rng) * total;
  double acc = 0.0;
  int last_positive = 0;
  int i = 0;
  for (const double w : weights) {
    if (w > 0.0) {
      last_positive = i;
    }
    acc += w;
    if (u < acc) {
      return i;
    }
    ++i;
  }
  return last_positive;
}

/// Systematic resampling: returns `count` ancestor indices for normalized weights.
inline std::vector<int> systematic_resample(std::span<const double> weights, int count, Rng& rng) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(count));
  const double step = 1.0 / count;
  double u = uniform01(rng) * step;
  double cumulative = weights.empty() ? 0.0 : weights[0];
  std::size_t j = 0;
  for (int i = 0; i < count; ++i) {
    while (u > cumulative && j + 1 < weights.size()) {
      ++j;
      cumulative += weights[j];
    }
    out.push_back(static_cast<int>(j));
    u += step;
  }
  return out;
}

/// Two-sided Hoeffding tail bound P(|mean - E| >= epsilon) <= 2 exp(-2 n epsilon^2) for [0, 1] variables.
inline double hoeffding_two_sided(double samples, double epsilon) {
  return 2.0 * std::exp(-2.0 * samples * epsilon * epsilon);
}

/// |a - b| / max(|a|, |b|); zero when both are zero.
inline double relative_difference(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale > 0.0 ? std::abs(a - b) / scale : 0.0;
}

/// relative_difference(exp(a), exp(b)) computed without leaving log-space.
inline double log_relative_difference(double log_a, double log_b) {
  if (log_a == log_b) {
    return 0.0;
  }
  return -std::expm1(-std::abs(log_a - log_b));
}

}  // namespace hybsem

#endif  // HYBSEM_NUMERIC_HPP
