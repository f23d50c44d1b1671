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

#ifndef HYBSEM_HYPOTHESIS_HPP
#define HYBSEM_HYPOTHESIS_HPP

#include <compare>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace hybsem {

/// One semantic mapping: the class of every object.
/**
 * Classes are zero-based, `classes[n]` in `[0, n_classes)`.
 */
struct Hypothesis {
  std::vector<int> classes;

  [[nodiscard]] int size() const { return static_cast<int>(classes.size()); }
  int operator[](int n) const { return classes[static_cast<std::size_t>(n)]; }

  auto operator<=>(const Hypothesis&) const = default;
};

/// Thrown when the hypothesis space is too large for the requested operation.
class HypothesisSpaceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mixed-radix codec for the (n_classes)^(n_objects) hypothesis space.
/**
 * `index = sum_n classes[n] * n_classes^n`, so object 0 is the least
 * significant digit. Construction fails when the space exceeds 2^63 entries.
 */
class HypothesisCodec {
 public:
  HypothesisCodec(int n_objects, int n_classes) : n_objects_{n_objects}, n_classes_{n_classes} {
    if (n_objects < 0 || n_classes < 1) {
      throw std::invalid_argument("HypothesisCodec: need n_objects >= 0 and n_classes >= 1");
    }
    constexpr std::uint64_t kLimit = std::uint64_t{1} << 63U;
    std::uint64_t size = 1;
    for (int n = 0; n < n_objects; ++n) {
      if (size > kLimit / static_cast<std::uint64_t>(n_classes)) {
        throw HypothesisSpaceError("hypothesis space (" + std::to_string(n_classes) + ")^" +
                                   std::to_string(n_objects) + " exceeds 2^63");
      }
      size *= static_cast<std::uint64_t>(n_classes);
    }
    size_ = size;
  }

  [[nodiscard]] int n_objects() const { return n_objects_; }
  [[nodiscard]] int n_classes() const { return n_classes_; }
  [[nodiscard]] std::uint64_t size() const { return size_; }

  [[nodiscard]] std::uint64_t encode(const Hypothesis& h) const {
    if (h.size() != n_objects_) {
      throw std::invalid_argument("HypothesisCodec::encode: wrong hypothesis length");
    }
    std::uint64_t index = 0;
    for (int n = n_objects_ - 1; n >= 0; --n) {
      const int c = h[n];
      if (c < 0 || c >= n_classes_) {
        throw std::out_of_range("HypothesisCodec::encode: class index out of range");
      }
      index = index * static_cast<std::uint64_t>(n_classes_) + static_cast<std::uint64_t>(c);
    }
    return index;
  }

  [[nodiscard]] Hypothesis decode(std::uint64_t index) const {
    if (index >= size_) {
      throw std::out_of_range("HypothesisCodec::decode: index out of range");
    }
    Hypothesis h;
    h.classes.resize(static_cast<std::size_t>(n_objects_));
    for (int n = 0; n < n_objects_; ++n) {
      h.classes[static_cast<std::size_t>(n)] = static_cast<int>(index % static_cast<std::uint64_t>(n_classes_));
      index /= static_cast<std::uint64_t>(n_classes_);
    }
    return h;
  }

  /// Advances `h` to the next hypothesis in index order; false after the last one.
  bool next(Hypothesis& h) const {
    for (int n = 0; n < n_objects_; ++n) {
      auto& c = h.classes[static_cast<std::size_t>(n)];
      if (++c < n_classes_) {
        return true;
      }
      c = 0;
    }
    return false;
  }

 private:
  int n_objects_;
  int n_classes_;
  std::uint64_t size_{1};
};

/// Throws HypothesisSpaceError when the space is larger than `limit`.
inline std::uint64_t require_enumerable(const HypothesisCodec& codec, std::uint64_t limit, const char* what) {
  if (codec.size() > limit) {
    throw HypothesisSpaceError(std::string{what} + ": |C| = " + std::to_string(codec.size()) +
                               " exceeds the enumeration guard of " + std::to_string(limit));
  }
  return codec.size();
}

}  // namespace hybsem

#endif  // HYBSEM_HYPOTHESIS_HPP
