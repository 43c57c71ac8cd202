/// @file  common.hpp
/// @brief Shared error type, label-set masks and seeding helpers.

#pragma once

#include <bit>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace tboost {

/// Raised on malformed input, violated preconditions and corrupted state.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Example and reference ids. Universes are bounded by 2^32.
using Id = std::uint32_t;

/// Label set over at most 64 labels, bit y set iff label y is a member.
using LabelMask = std::uint64_t;

inline constexpr std::size_t max_labels = 64;

constexpr LabelMask label_bit(std::size_t y) { return LabelMask{1} << y; }

constexpr bool contains(LabelMask set, std::size_t y) {
  return (set >> y) & LabelMask{1};
}

constexpr LabelMask all_labels(std::size_t L) {
  return L >= 64 ? ~LabelMask{0} : label_bit(L) - 1;
}

/// SplitMix64. Cheap to seed, used for per-trial and per-cell streams so that
/// results do not depend on how work is scheduled.
class SplitMix64 {
public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

private:
  std::uint64_t state_;
};

/// Derives an independent seed for sub-stream `stream` of `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  SplitMix64 g(seed ^ (0x632be59bd9b4e019ULL * (stream + 1)));
  g();
  return g();
}

} // namespace tboost
