#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>

namespace bnpseg {

// Every chain owns one of these; seeding is the only source of randomness.
using Rng = std::mt19937_64;

// Uniform double in [0, 1) built from the top 53 bits, identical on every
// standard library (std::uniform_real_distribution is not).
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Derives an independent seed for stream `index` from a base seed
// (splitmix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline double log_sum_exp(std::span<const double> values) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : values) hi = v > hi ? v : hi;
  if (std::isinf(hi)) return hi;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - hi);
  return hi + std::log(sum);
}

// Draws an index with probability proportional to exp(log_weights[i]).
// Entries equal to -inf have zero mass; all -inf is a logic error.
inline std::size_t sample_log_categorical(std::span<const double> log_weights,
                                          Rng& rng) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double w : log_weights) hi = w > hi ? w : hi;
  if (!(hi > -std::numeric_limits<double>::infinity())) {
    throw std::logic_error("categorical draw with no positive-mass candidate");
  }
  double total = 0.0;
  for (double w : log_weights) total += std::exp(w - hi);
  double u = uniform01(rng) * total;
  std::size_t last = 0;
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    if (log_weights[i] == -std::numeric_limits<double>::infinity()) continue;
    u -= std::exp(log_weights[i] - hi);
    last = i;
    if (u < 0.0) return i;
  }
  return last;  // rounding fell off the end
}

}  // namespace bnpseg
