#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "ddlqr/lti.hpp"

namespace ddlqr {

/// SplitMix64 finalizer (Steele, Lea, Flood 2014).
std::uint64_t splitmix64(std::uint64_t x);

/// Seed of an independent stream keyed by (master seed, trial index, label).
/// The label is folded in with 64-bit FNV-1a, so streams for different
/// labels of the same trial never depend on execution order.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index,
                          std::string_view label = {});

/// mt19937_64 stream with Gaussian/uniform helpers.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t master, std::uint64_t index, std::string_view label)
      : engine_(derive_seed(master, index, label)) {}

  double normal() { return normal_(engine_); }
  double uniform(double lo, double hi);
  Matrix normal_matrix(int rows, int cols, double stddev = 1.0);
  Vector normal_vector(int size, double stddev = 1.0);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace ddlqr
