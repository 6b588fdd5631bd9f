#include "ddlqr/rng.hpp"

namespace ddlqr {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index,
                          std::string_view label) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return splitmix64(splitmix64(splitmix64(master) ^ index) ^ h);
}

double Rng::uniform(double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  return dist(engine_);
}

Matrix Rng::normal_matrix(int rows, int cols, double stddev) {
  Matrix M(rows, cols);
  // Column by column, so an n x T draw equals T successive n-vector draws.
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) M(i, j) = stddev * normal();
  }
  return M;
}

Vector Rng::normal_vector(int size, double stddev) {
  Vector v(size);
  for (int i = 0; i < size; ++i) v(i) = stddev * normal();
  return v;
}

}  // namespace ddlqr
