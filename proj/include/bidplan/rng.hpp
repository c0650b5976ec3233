#pragma once

#include <cstdint>
#include <random>

namespace bidplan {

using Rng = std::mt19937_64;

// Named random streams. Every random draw in an experiment comes from a
// generator seeded by derive_seed(experiment_seed, stream, index...).
enum class Stream : std::uint64_t {
  profiles = 1,
  dataset = 2,
  evaluator = 3,
  planner = 4,
  controller = 5,
  evaluation = 6,
  lipschitz = 7,
  quality_bound = 8,
  behavior = 9,
  calibration = 10,
};

// splitmix64 finalizer.
std::uint64_t mix_seed(std::uint64_t x) noexcept;

std::uint64_t derive_seed(std::uint64_t master, Stream stream, std::uint64_t a = 0,
                          std::uint64_t b = 0, std::uint64_t c = 0) noexcept;

inline Rng make_rng(std::uint64_t master, Stream stream, std::uint64_t a = 0,
                    std::uint64_t b = 0, std::uint64_t c = 0) {
  return Rng(derive_seed(master, stream, a, b, c));
}

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double standard_normal(Rng& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace bidplan
