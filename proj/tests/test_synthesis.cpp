#include <cmath>

#include "doctest.h"
#include "ddlqr/errors.hpp"
#include "ddlqr/synthesis.hpp"
#include "support/plants.hpp"

using namespace ddlqr;
using testing_support::random_plant;
using testing_support::rel;

TEST_SUITE("synthesis") {

TEST_CASE("model-based program recovers the Riccati gain") {
  for (int k = 0; k < 10; ++k) {
    const auto plant = random_plant(11, k, NoiseSpec::none());
    const RiccatiSolution dare = solve_dare(plant.sys);
    const SynthesisResult res = solve(build_model_based(plant.sys));
    REQUIRE(res.status == SolverStatus::Optimal);
    CHECK(rel(res.K, dare.Kopt) <= 1e-4);
    const double h2opt = h2_norm_squared(plant.sys, dare.Kopt);
    CHECK(std::abs(res.gamma - h2opt) / h2opt <= 1e-5);
  }
}

TEST_CASE("model-based program with A = 0 returns K = 0") {
  const DiscreteLtiSystem sys(Matrix::Zero(1, 1), Matrix::Ones(1, 1));
  const SynthesisResult res = solve(build_model_based(sys));
  REQUIRE(res.status == SolverStatus::Optimal);
  CHECK(res.gamma == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(res.K(0, 0)) <= 1e-5);
}

TEST_CASE("noise-free data programs recover the Riccati gain") {
  for (int k = 0; k < 5; ++k) {
    const auto plant = random_plant(12, k, NoiseSpec::none());
    CAPTURE(k);
    REQUIRE(rank_condition(plant.dm));
    const RiccatiSolution dare = solve_dare(plant.sys);
    const double h2opt = h2_norm_squared(plant.sys, dare.Kopt);
    DataMatrices dm = plant.dm;
    dm.D0 = Matrix::Zero(3, 20);
    for (const auto& prog : {build_ideal(dm), build_baseline(dm)}) {
      const SynthesisResult res = solve(prog);
      REQUIRE(res.status == SolverStatus::Optimal);
      CHECK(rel(res.K, dare.Kopt) <= 1e-3);
      CHECK(std::abs(res.gamma - h2opt) / h2opt <= 1e-4);
    }
  }
}

TEST_CASE("decoded quantities satisfy the data relations") {
  for (int k = 0; k < 5; ++k) {
    const auto plant = random_plant(13, k, NoiseSpec::wgn(0.01));
    CAPTURE(k);
    for (const auto& prog : {build_baseline(plant.dm), build_soft(plant.dm, 1.0)}) {
      const SynthesisResult res = solve(prog);
      if (res.status != SolverStatus::Optimal) continue;
      const auto& dm = plant.dm;
      CHECK(rel(dm.X0 * res.Q, res.P) <= 1e-6);
      CHECK(rel(res.K * res.P, dm.U0 * res.Q) <= 1e-6);
      CHECK(res.h2_bound == doctest::Approx(res.P.trace() + res.L.trace()));
      CHECK(res.min_slack >= -kTolFeas);
      if (res.V) {
        // V >= Q P^-1 Q'.
        const Matrix gap = *res.V - res.Q * res.P.llt().solve(res.Q.transpose());
        Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (gap + gap.transpose()));
        CHECK(eig.eigenvalues().minCoeff() >= -1e-6 * std::max(1.0, res.V->norm()));
      }
    }
  }
}

TEST_CASE("noise-free soft and baseline bounds dominate the true cost") {
  for (int k = 0; k < 5; ++k) {
    const auto plant = random_plant(14, k, NoiseSpec::none());
    for (const auto& prog : {build_baseline(plant.dm), build_soft(plant.dm, 1.0)}) {
      const SynthesisResult res = solve(prog);
      REQUIRE(res.status == SolverStatus::Optimal);
      REQUIRE(is_schur(plant.sys.closed_loop(res.K)));
      CHECK(h2_norm_squared(plant.sys, res.K) <= res.h2_bound * (1.0 + 1e-6));
    }
  }
}

TEST_CASE("the scaled formulation is an exact congruence") {
  Rng rng(15, 0, "scale");
  const auto plant = random_plant(15, 1, NoiseSpec::wgn(0.01));
  const SynthesisProgram base = build_soft(plant.dm, 2.0);
  Matrix Tm = rng.normal_matrix(3, 3).triangularView<Eigen::Lower>();
  Tm.diagonal() = Tm.diagonal().cwiseAbs().array() + 1.0;
  const SynthesisProgram scaled = base.rebuild(Tm);
  CHECK(scaled.scale == Tm);
  const SynthesisResult a = solve(base);
  const SynthesisResult b = solve(scaled);
  REQUIRE(a.status == SolverStatus::Optimal);
  REQUIRE(b.status == SolverStatus::Optimal);
  CHECK(b.gamma == doctest::Approx(a.gamma).epsilon(1e-5));
  CHECK(rel(b.K, a.K) <= 1e-4);
}

TEST_CASE("program preconditions") {
  const auto plant = random_plant(16, 0, NoiseSpec::wgn(0.01));
  DataMatrices dm = plant.dm;
  CHECK_THROWS_AS(build_soft(dm, 0.5), PreconditionViolation);
  const Matrix R = dm.X1;
  CHECK_THROWS_AS(build_sproc(dm, 0.0, R, 1.0), PreconditionViolation);
  CHECK_THROWS_AS(build_sproc(dm, 1.0, R, 0.5), PreconditionViolation);
  CHECK_THROWS_AS(build_sproc(dm, 1.0, Matrix::Ones(3, 7), 1.0), DimensionMismatch);
  CHECK_THROWS_AS(build_sproc(dm, 1.0, Matrix::Ones(3, 20), 1.0), PreconditionViolation);
  CHECK_THROWS_AS(build_program(dm, program::ModelBased{}), PreconditionViolation);
  dm.D0.reset();
  CHECK_THROWS_AS(build_ideal(dm), MissingD0);
  DataMatrices bad = plant.dm;
  bad.X1 = Matrix::Zero(3, 19);
  CHECK_THROWS_AS(build_baseline(bad), DimensionMismatch);
  CHECK(variant_name(program::Soft{}) == "soft");
  CHECK(variant_name(program::SProc{}) == "sproc");
}

TEST_CASE("mu_for_bound is the smallest admissible mu") {
  Rng rng(17, 0, "mu");
  const Matrix R = rng.normal_matrix(3, 20);
  const double delta = 0.7;
  const double mu = mu_for_bound(delta, R);
  const Matrix S = mu * mu * R * R.transpose() - delta * delta * Matrix::Identity(3, 3);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(S);
  CHECK(std::abs(eig.eigenvalues().minCoeff()) <= 1e-10 * S.norm());
  CHECK_THROWS_AS(mu_for_bound(-1.0, R), PreconditionViolation);
  CHECK_THROWS_AS(mu_for_bound(1.0, Matrix::Zero(3, 20)), PreconditionViolation);
}

TEST_CASE("S-procedure line search") {
  const auto plant = random_plant(18, 0, NoiseSpec::wgn(0.01));
  const Matrix& R = plant.dm.X1;
  CHECK_THROWS_AS(sproc_line_search(plant.dm, 1.0, R, {}), PreconditionViolation);
  CHECK_THROWS_AS(sproc_line_search(plant.dm, 1.0, R, {2.0, 1.5}), PreconditionViolation);
  CHECK_THROWS_AS(sproc_line_search(plant.dm, 1.0, R, {0.5}), PreconditionViolation);

  const double delta = 0.01 * 1.5 * std::sqrt(20.0);
  const double mu = mu_for_bound(delta, R);
  const LineSearchResult ls = sproc_line_search(plant.dm, mu, R, default_eta1_grid(), delta);
  CHECK(ls.result.status == SolverStatus::Optimal);
  CHECK(ls.eta1 >= 1.0);
  REQUIRE(ls.result.V.has_value());
  if (ls.certified) CHECK(is_schur(plant.sys.closed_loop(ls.result.K)));

  // A bound far above the data scale leaves no feasible eta1.
  CHECK_THROWS_AS(sproc_line_search(plant.dm, mu_for_bound(1e4, R), R, {1.0, 2.0}, 1e4),
                  AllInfeasible);
}

}
