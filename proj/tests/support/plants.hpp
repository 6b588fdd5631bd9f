#pragma once

#include "ddlqr/data.hpp"
#include "ddlqr/lti.hpp"
#include "ddlqr/rng.hpp"

namespace testing_support {

struct Plant {
  ddlqr::DiscreteLtiSystem sys;
  ddlqr::DataMatrices dm;
};

// Random n x n / n x m plant with Gaussian entries and one experiment of
// length T driven by a Gaussian input.
inline Plant random_plant(std::uint64_t seed, int index, const ddlqr::NoiseSpec& noise,
                          int n = 3, int m = 1, int T = 20) {
  ddlqr::Rng rng(seed, index, "plant");
  for (;;) {
    ddlqr::DiscreteLtiSystem sys(rng.normal_matrix(n, n), rng.normal_matrix(n, m));
    if (!ddlqr::is_stabilizable(sys.A(), sys.B())) continue;
    const ddlqr::Vector x0 = rng.normal_vector(n);
    const ddlqr::Matrix U = rng.normal_matrix(m, T);
    ddlqr::Rng nrng(seed, index, noise.stream_label());
    const auto traj = ddlqr::simulate(sys, x0, U, noise, T, nrng);
    return {sys, ddlqr::build_data_matrices(traj)};
  }
}

inline double rel(const ddlqr::Matrix& a, const ddlqr::Matrix& b) {
  return (a - b).norm() / std::max(1e-300, b.norm());
}

}  // namespace testing_support
