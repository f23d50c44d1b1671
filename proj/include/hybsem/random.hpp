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

#ifndef HYBSEM_RANDOM_HPP
#define HYBSEM_RANDOM_HPP

#include <cstdint>
#include <random>

#include <Eigen/Core>

/**
 * \file
 * \brief Seeded random streams.
 *
 * Every trial owns a family of independent substreams derived from
 * `(base_seed, trial, component)`, so experiment output does not depend on the
 * order in which trials or methods are evaluated.
 */

namespace hybsem {

using Rng = std::mt19937_64;

/// Components of a trial that draw randomness independently of each other.
enum class Stream : std::uint32_t {
  kWorld = 1,
  kNoise = 2,
  kSampler = 3,
  kPlanner = 4,
  kFilter = 5,
  kReference = 6,
};

/// Builds the substream for one component of one trial.
inline Rng make_rng(std::uint64_t base_seed, std::uint64_t trial, Stream component, std::uint64_t salt = 0) {
  std::seed_seq seq{
      static_cast<std::uint32_t>(base_seed & 0xffffffffULL), static_cast<std::uint32_t>(base_seed >> 32U),
      static_cast<std::uint32_t>(trial & 0xffffffffULL),     static_cast<std::uint32_t>(trial >> 32U),
      static_cast<std::uint32_t>(component),                  static_cast<std::uint32_t>(salt & 0xffffffffULL),
      static_cast<std::uint32_t>(salt >> 32U)};
  return Rng(seq);
}

/// Splits a child stream off `parent`; deterministic given the parent state.
inline Rng split(Rng& parent) {
  std::seed_seq seq{static_cast<std::uint32_t>(parent()), static_cast<std::uint32_t>(parent()),
                    static_cast<std::uint32_t>(parent()), static_cast<std::uint32_t>(parent())};
  return Rng(seq);
}

inline double standard_normal(Rng& rng) {
  std::normal_distribution<double> normal{0.0, 1.0};
  return normal(rng);
}

inline Eigen::VectorXd standard_normal_vector(Rng& rng, Eigen::Index size) {
  std::normal_distribution<double> normal{0.0, 1.0};
  Eigen::VectorXd out(size);
  for (Eigen::Index i = 0; i < size; ++i) {
    out[i] = normal(rng);
  }
  return out;
}

inline double uniform01(Rng& rng) {
  std::uniform_real_distribution<double> uniform{0.0, 1.0};
  return uniform(rng);
}

}  // namespace hybsem

#endif  // HYBSEM_RANDOM_HPP
