#include <cmath>

#include "doctest.h"
#include "json.hpp"
#include "ddlqr/certificates.hpp"
#include "ddlqr/errors.hpp"
#include "support/plants.hpp"

using namespace ddlqr;
using testing_support::random_plant;
using testing_support::rel;

namespace {

double lmax(const Matrix& S) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (S + S.transpose()));
  return eig.eigenvalues().maxCoeff();
}

double norm2(const Matrix& M) {
  Eigen::JacobiSVD<Matrix> svd(M);
  return svd.singularValues()(0);
}

}  // namespace

TEST_SUITE("certificates") {

TEST_CASE("eta from lambda") {
  CHECK(eta_from_lambda(-1.0) == 1.0);
  CHECK(eta_from_lambda(0.0) == 1.0);
  CHECK(eta_from_lambda(0.5) == doctest::Approx(2.0));
  CHECK(eta_from_lambda(0.9) == doctest::Approx(10.0));
  CHECK_THROWS_AS(eta_from_lambda(1.0), CertificateFailure);
}

TEST_CASE("noise bound rules") {
  CHECK(NoiseBound::wgn_rule(0.1, 20).delta == doctest::Approx(std::sqrt(20.0) * 0.15));
  CHECK(NoiseBound::wgn_rule(0.1, 20, 100).delta == doctest::Approx(std::sqrt(20.0) * 0.015));
  CHECK(NoiseBound::bias_rule(0.05, 20, 3).delta == doctest::Approx(std::sqrt(60.0) * 0.05));
  CHECK(NoiseBound::user(0.3).delta == 0.3);
  CHECK(std::string(to_string(NoiseBound::Rule::Wgn)) == "wgn_rule");
}

TEST_CASE("psi matches its definition") {
  Rng rng(1, 0, "psi");
  const Matrix M = rng.normal_matrix(5, 5);
  const Matrix X1 = rng.normal_matrix(2, 5);
  const Matrix D0 = rng.normal_matrix(2, 5);
  const Matrix Ms = 0.5 * (M + M.transpose());
  const Matrix expect = D0 * Ms * D0.transpose() - X1 * Ms * D0.transpose() -
                        D0 * Ms * X1.transpose();
  CHECK(rel(psi(Ms, X1, D0), expect) <= 1e-12);
}

TEST_CASE("minimum-norm Go solves W0 Go = [K; I] with least norm") {
  Rng rng(2, 0, "go");
  const Matrix W0 = rng.normal_matrix(4, 20);
  const Matrix K = rng.normal_matrix(1, 3);
  Matrix rhs(4, 3);
  rhs << K, Matrix::Identity(3, 3);
  const Matrix Go = minimum_norm_Go(W0, K);
  CHECK(rel(W0 * Go, rhs) <= 1e-12);
  // Closed form for full row rank W0.
  const Matrix closed = W0.transpose() * (W0 * W0.transpose()).ldlt().solve(rhs);
  CHECK(rel(Go, closed) <= 1e-10);
  // Null-space perturbations from an independent full SVD only increase the norm.
  Eigen::JacobiSVD<Matrix> svd(W0, Eigen::ComputeFullV);
  const Matrix Nz = svd.matrixV().rightCols(16);
  CHECK((W0 * Nz).norm() <= 1e-10);
  for (int i = 0; i < 100; ++i) {
    const Matrix G = Go + Nz * rng.normal_matrix(16, 3);
    CHECK(rel(W0 * G, rhs) <= 1e-10);
    CHECK(G.norm() >= Go.norm());
  }
  CHECK_THROWS_AS(minimum_norm_Go(Matrix::Ones(4, 20), K), RankDeficient);
}

TEST_CASE("stability margin bound") {
  const auto plant = random_plant(3, 0, NoiseSpec::wgn(0.01));
  const SynthesisResult res = solve(build_baseline(plant.dm));
  REQUIRE(res.status == SolverStatus::Optimal);
  const Matrix M = res.Q * res.P.inverse() * res.Q.transpose();
  const NoiseBound b = NoiseBound::user(0.05);
  const double expect = 0.05 * 0.05 * norm2(M) + 2.0 * 0.05 * norm2(plant.dm.X1 * M);
  CHECK(stability_margin_bound(res, plant.dm.X1, b) == doctest::Approx(expect).epsilon(1e-8));
  const auto eta = eta1_from_data(res, plant.dm.X1, b);
  if (expect < 1.0) {
    REQUIRE(eta.has_value());
    CHECK(*eta == doctest::Approx(1.0 / (1.0 - expect)));
    CHECK(data_only_stability_check(res, plant.dm.X1, b, *eta * (1.0 + 1e-12)));
  } else {
    CHECK_FALSE(eta.has_value());
  }
  CHECK_THROWS_AS(data_only_stability_check(res, plant.dm.X1, b, 0.5), PreconditionViolation);
}

TEST_CASE("certificates are sound on noisy soft trials") {
  int certified = 0;
  for (int k = 0; k < 20; ++k) {
    const auto plant = random_plant(4, k, NoiseSpec::wgn(0.01));
    const SynthesisResult res = solve(build_soft(plant.dm, 1.0));
    if (res.status != SolverStatus::Optimal) continue;
    const Matrix& D0 = *plant.dm.D0;
    // Oracle: eta1 from the true disturbance.
    const double lam = lmax(psi(noise_gain(res.Q, res.P), plant.dm.X1, D0));
    if (lam < 1.0) {
      const double eta1 = eta1_from_solution(res, plant.dm.X1, D0);
      CHECK(eta1 == doctest::Approx(eta_from_lambda(lam)));
      REQUIRE(is_schur(plant.sys.closed_loop(res.K)));
      CHECK(h2_norm_squared(plant.sys, res.K) <= eta1 * res.h2_bound * (1.0 + 1e-6));
      ++certified;
    }
    // Data-only: valid whenever |D0| <= delta.
    const NoiseBound b = NoiseBound::user(norm2(D0));
    if (eta1_from_data(res, plant.dm.X1, b)) {
      CHECK(is_schur(plant.sys.closed_loop(res.K)));
    }
  }
  CHECK(certified >= 10);
}

TEST_CASE("S-procedure checks") {
  const Matrix V = Matrix::Identity(2, 2);
  const Matrix R = Matrix::Identity(2, 2);
  CHECK(data_only_sproc_check(V, NoiseBound::user(1.0), 1.0, R));
  CHECK_FALSE(data_only_sproc_check(V, NoiseBound::user(1.01), 1.0, R));
  SynthesisResult no_v;
  CHECK_THROWS_AS(data_only_sproc_check(no_v, NoiseBound::user(1.0), 1.0, R), MissingV);

  // The data-only check implies the oracle condition whenever |D0| <= delta.
  Rng rng(5, 0, "sproc");
  for (int i = 0; i < 50; ++i) {
    const Matrix A = rng.normal_matrix(6, 6);
    const Matrix Vr = A * A.transpose();
    const Matrix Rr = rng.normal_matrix(3, 6);
    const Matrix D0 = 0.1 * rng.normal_matrix(3, 6);
    const NoiseBound b = NoiseBound::user(norm2(D0));
    const double mu = 3.0 * rng.uniform(0.0, 1.0);
    if (data_only_sproc_check(Vr, b, mu, Rr)) CHECK(sproc_condition(Vr, D0, mu, Rr));
  }
}

TEST_CASE("ideal optimum from the true system") {
  const auto plant = random_plant(6, 0, NoiseSpec::wgn(0.01));
  const IdealOptimum io = minimum_norm_ideal_optimum(plant.sys, plant.dm);
  const RiccatiSolution dare = solve_dare(plant.sys);
  CHECK(rel(io.Kopt, dare.Kopt) <= 1e-10);
  CHECK(rel(io.Po, controllability_gramian(plant.sys.closed_loop(dare.Kopt))) <= 1e-10);
  CHECK(rel(plant.dm.X0 * io.Qo, io.Po) <= 1e-8);
  CHECK(rel(plant.dm.U0 * io.Qo, io.Kopt * io.Po) <= 1e-8);
  CHECK(rel(io.Vo, io.Qo * io.Po.inverse() * io.Qo.transpose()) <= 1e-8);
  CHECK(io.h2_opt == doctest::Approx(h2_norm_squared(plant.sys, dare.Kopt)));
}

TEST_CASE("report JSON carries the mode and nullable fields") {
  const auto plant = random_plant(7, 0, NoiseSpec::wgn(0.01));
  const SynthesisResult res = solve(build_soft(plant.dm, 1.0));
  REQUIRE(res.status == SolverStatus::Optimal);

  CertificateContext data_ctx;
  data_ctx.data = &plant.dm;
  data_ctx.bound = NoiseBound::wgn_rule(0.01, 20);
  const auto d = nlohmann::json::parse(to_json(assemble_report(res, program::Soft{1.0}, data_ctx)));
  CHECK(d["mode"] == "data_only");
  CHECK(d["eta1"].is_null());
  CHECK(d["eta2"].is_null());
  CHECK(d["psi_bar_lambda_max"].is_null());
  CHECK(d["noise_within_bound"].is_null());
  CHECK(d["stability_check"].is_boolean());
  CHECK(d["sproc_check"].is_null());

  CertificateContext oracle_ctx = data_ctx;
  oracle_ctx.oracle = true;
  oracle_ctx.ideal = minimum_norm_ideal_optimum(plant.sys, plant.dm);
  const CertificateReport r = assemble_report(res, program::Soft{1.0}, oracle_ctx);
  const auto o = nlohmann::json::parse(to_json(r));
  CHECK(o["mode"] == "oracle");
  CHECK(o["psi_bar_lambda_max"].is_number());
  CHECK(o["noise_within_bound"].is_boolean());
  if (r.eta1 && r.eta2) {
    REQUIRE(r.eta3.has_value());
    CHECK(*r.relative_error_bound ==
          doctest::Approx(*r.eta1 * *r.eta2 - 1.0 + *r.eta3));
    const double h2opt = oracle_ctx.ideal->h2_opt;
    const double Ek = (h2_norm_squared(plant.sys, res.K) - h2opt) / h2opt;
    CHECK(Ek <= *r.relative_error_bound + 1e-6);
  }

  SynthesisResult failed;
  failed.status = SolverStatus::Infeasible;
  const auto f = nlohmann::json::parse(to_json(assemble_report(failed, program::Soft{}, oracle_ctx)));
  CHECK(f["mode"] == "oracle");
  CHECK(f["eta1"].is_null());
  CHECK(f["performance_bound"].is_null());
}

}
