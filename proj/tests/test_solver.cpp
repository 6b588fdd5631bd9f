#include <cmath>

#include "doctest.h"
#include "ddlqr/rng.hpp"
#include "ddlqr/solver.hpp"

using namespace ddlqr;

namespace {

SolverOutput run(const SdpProblem& p, SearchDirection dir = SearchDirection::Hkm) {
  SolverSettings s;
  s.direction = dir;
  s.fallback = false;
  return InteriorPointSolver().solve(p, s);
}

}  // namespace

TEST_SUITE("solver") {

TEST_CASE("minimum t with t I >= C is the largest eigenvalue") {
  Rng rng(1, 0, "lmax");
  for (int trial = 0; trial < 5; ++trial) {
    Matrix R = rng.normal_matrix(4, 4);
    const Matrix C = 0.5 * (R + R.transpose());
    SdpProblem p;
    const auto t = p.add_variable("t", 1, 1, true);
    AffineExpr d(4, 4);
    for (int i = 0; i < 4; ++i) d.add_variable(i, i, t);
    d.add_constant(0, 0, -C);
    p.add_psd("lmax", d);
    p.add_trace_objective(t);
    for (auto dir : {SearchDirection::Hkm, SearchDirection::Nt}) {
      const SolverOutput out = run(p, dir);
      REQUIRE(out.status == SolverStatus::Optimal);
      Eigen::SelfAdjointEigenSolver<Matrix> eig(C);
      CHECK(out.primal_objective == doctest::Approx(eig.eigenvalues().maxCoeff()).epsilon(1e-6));
      CHECK(out.relative_gap <= 1e-6);
    }
  }
}

TEST_CASE("diagonal blocks act as a linear program") {
  SdpProblem p;
  const auto x = p.add_variable("x", 1, 1, true);
  const auto z = p.add_variable("z", 1, 1, true);
  p.add_psd("x>=1", AffineExpr(1, 1).add_variable(0, 0, x).add_constant(0, 0, -Matrix::Ones(1, 1)));
  p.add_psd("z>=2", AffineExpr(1, 1).add_variable(0, 0, z).add_constant(0, 0,
                                                                        -2.0 * Matrix::Ones(1, 1)));
  p.add_trace_objective(x);
  p.add_trace_objective(z);
  const SolverOutput out = run(p);
  REQUIRE(out.status == SolverStatus::Optimal);
  CHECK(out.primal_objective == doctest::Approx(3.0).epsilon(1e-7));
  CHECK(out.dual_objective == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("equality constraints: min t with [t x; x 1] >= 0 and x = 2") {
  SdpProblem p;
  const auto t = p.add_variable("t", 1, 1, true);
  const auto x = p.add_variable("x", 1, 1, true);
  AffineExpr e(2, 2);
  e.add_variable(0, 0, t).add_sym_variable(0, 1, x).add_constant(1, 1, Matrix::Ones(1, 1));
  p.add_psd("schur", e);
  p.add_equality(AffineExpr(1, 1).add_variable(0, 0, x).add_constant(0, 0,
                                                                     -2.0 * Matrix::Ones(1, 1)));
  p.add_trace_objective(t);
  const SolverOutput out = run(p);
  REQUIRE(out.status == SolverStatus::Optimal);
  CHECK(out.primal_objective == doctest::Approx(4.0).epsilon(1e-6));
  CHECK(p.value(x, out.y)(0, 0) == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(out.primal_infeasibility <= 1e-7);
}

TEST_CASE("infeasible problems are reported") {
  SdpProblem p;
  const auto x = p.add_variable("x", 1, 1, true);
  p.add_psd("x>=1", AffineExpr(1, 1).add_variable(0, 0, x).add_constant(0, 0, -Matrix::Ones(1, 1)));
  p.add_psd("x<=0", AffineExpr(1, 1).add_variable(0, 0, x, -1.0));
  p.add_trace_objective(x);
  const SolverOutput out = InteriorPointSolver().solve(p, SolverSettings{});
  CHECK(out.status == SolverStatus::Infeasible);
}

TEST_CASE("matrix-valued SDP: minimum trace Lyapunov certificate") {
  // min tr P s.t. P - A P A' - I >= 0; optimum is the Gramian.
  Matrix A(2, 2);
  A << 0.5, 0.3, -0.2, 0.4;
  SdpProblem p;
  const auto P = p.add_variable("P", 2, 2, true);
  AffineExpr e(2, 2);
  e.add_variable(0, 0, P).add_term(0, 0, A, P, A.transpose(), -1.0);
  e.add_constant(0, 0, -Matrix::Identity(2, 2));
  p.add_psd("lyap", e);
  p.add_trace_objective(P);
  const SolverOutput out = run(p);
  REQUIRE(out.status == SolverStatus::Optimal);
  const Matrix Pg = controllability_gramian(A);
  CHECK((p.value(P, out.y) - Pg).norm() <= 1e-5 * Pg.norm());
}

TEST_CASE("status names") {
  CHECK(std::string(to_string(SolverStatus::Optimal)) == "Optimal");
  CHECK(default_backend()->name() == "ipm");
}

}
