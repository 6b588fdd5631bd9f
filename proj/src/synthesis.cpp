#include "ddlqr/synthesis.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "ddlqr/certificates.hpp"
#include "ddlqr/errors.hpp"

namespace ddlqr {

namespace {

struct Overloaded {
  std::string operator()(const program::ModelBased&) const { return "model_based"; }
  std::string operator()(const program::Ideal&) const { return "ideal"; }
  std::string operator()(const program::Baseline&) const { return "baseline"; }
  std::string operator()(const program::Soft&) const { return "soft"; }
  std::string operator()(const program::SProc&) const { return "sproc"; }
};

Matrix sym(const Matrix& M) { return 0.5 * (M + M.transpose()); }

// Orthonormal basis of the row space of W, columns scaled by 1/max(1, s_k).
Matrix row_space_basis(const Matrix& W) {
  Eigen::JacobiSVD<Matrix> svd(W, Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  const int r = numeric_rank(W);
  if (r == 0) throw RankDeficient("data matrices are zero");
  Matrix N = svd.matrixV().leftCols(r);
  for (int k = 0; k < r; ++k) N.col(k) /= std::max(1.0, sv(k));
  return N;
}

void check_data(const DataMatrices& dm) {
  const int n = dm.n();
  const int T = dm.samples();
  if (n < 1 || dm.m() < 1 || T < 1) throw DimensionMismatch("empty data matrices");
  if (dm.X1.rows() != n || dm.X1.cols() != T || dm.U0.cols() != T) {
    throw DimensionMismatch("U0, X0, X1 must share the sample count");
  }
}

// Shared skeleton of the data programs in the coordinates P = T p T',
// Q = N E g T': p >= Ti Ti', [L, U0 N E g; ., p] >= 0, Ti X0 N E g = p and
// the objective trace(T' T p) + trace(L), with Ti = T^-1. `Xp` is the matrix
// that multiplies Q in the closed-loop block (X1 or X1 - D0); when
// `closed_loop` is set the block [p - Ti Ti', Ti Xp N E g; ., p] >= 0 is added.
struct DataSkeleton {
  SynthesisProgram prog;
  MatrixVariable P, L, q;
  Matrix U0s, X0s, X1s, Ti;
};

DataSkeleton data_skeleton(const DataMatrices& dm, const Matrix& Xp, bool closed_loop,
                           const Matrix& T, const Matrix* extra_rows = nullptr) {
  check_data(dm);
  DataSkeleton s;
  const int n = dm.n();
  const int m = dm.m();
  const int samples = dm.samples();
  s.prog.n = n;
  s.prog.m = m;
  s.prog.T = samples;
  s.prog.U0 = dm.U0;
  s.prog.scale = T;
  s.prog.rank_condition = rank_condition(dm);
  s.Ti = T.inverse();

  const int extra = extra_rows ? static_cast<int>(extra_rows->rows()) : 0;
  Matrix W(m + 2 * n + extra, samples);
  W << dm.U0, dm.X0, Xp, (extra_rows ? *extra_rows : Matrix(0, samples));
  s.prog.basis = row_space_basis(W);
  const Matrix& Nb = s.prog.basis;
  const int r = static_cast<int>(Nb.cols());
  s.U0s = dm.U0 * Nb;
  s.X0s = s.Ti * dm.X0 * Nb;
  s.X1s = s.Ti * Xp * Nb;

  SdpProblem& sdp = s.prog.sdp;
  s.P = sdp.add_variable("P", n, n, true);
  s.L = sdp.add_variable("L", m, m, true);
  s.q = sdp.add_variable("G", r, n, false);
  const Matrix In = Matrix::Identity(n, n);
  const Matrix TiTi = s.Ti * s.Ti.transpose();

  if (closed_loop) {
    AffineExpr cl(2 * n, 2 * n);
    cl.add_variable(0, 0, s.P).add_constant(0, 0, -TiTi);
    cl.add_sym_term(0, n, s.X1s, s.q, In);
    cl.add_variable(n, n, s.P);
    sdp.add_psd("closed_loop", cl);
  }

  AffineExpr pI(n, n);
  pI.add_variable(0, 0, s.P).add_constant(0, 0, -TiTi);
  sdp.add_psd("P_ge_I", pI);

  AffineExpr lb(m + n, m + n);
  lb.add_variable(0, 0, s.L);
  lb.add_sym_term(0, m, s.U0s, s.q, In);
  lb.add_variable(m, m, s.P);
  sdp.add_psd("L_block", lb);

  AffineExpr eq(n, n);
  eq.add_term(0, 0, s.X0s, s.q, In).add_variable(0, 0, s.P, -1.0);
  sdp.add_equality(eq);

  sdp.add_objective(s.P, T.transpose() * T);
  sdp.add_trace_objective(s.L);
  return s;
}

// V block [v, g; g', p] >= 0 and the objective alpha * trace(N E v E N').
MatrixVariable add_v_block(DataSkeleton& s, double alpha) {
  const int r = static_cast<int>(s.prog.basis.cols());
  const int n = s.prog.n;
  SdpProblem& sdp = s.prog.sdp;
  MatrixVariable v = sdp.add_variable("V", r, r, true);
  AffineExpr vb(r + n, r + n);
  vb.add_variable(0, 0, v);
  vb.add_sym_variable(0, r, s.q);
  vb.add_variable(r, r, s.P);
  sdp.add_psd("V_block", vb);
  sdp.add_objective(v, alpha * s.prog.basis.transpose() * s.prog.basis);
  return v;
}

SynthesisProgram model_based(const DiscreteLtiSystem& sys, const PerformanceWeights& w,
                             const Matrix& T) {
  const int n = sys.n();
  const int m = sys.m();
  SynthesisProgram prog;
  prog.variant = program::ModelBased{};
  prog.n = n;
  prog.m = m;
  prog.scale = T;
  SdpProblem& sdp = prog.sdp;
  const auto P = sdp.add_variable("P", n, n, true);
  const auto L = sdp.add_variable("L", m, m, true);
  const auto Y = sdp.add_variable("Y", m, n, false);
  const Matrix In = Matrix::Identity(n, n);
  const Matrix Ti = T.inverse();

  // With P = T p T' and K P = y T': [p - Ti Ti', Ti A T p + Ti B y; ., p] >= 0
  AffineExpr cl(2 * n, 2 * n);
  cl.add_variable(0, 0, P).add_constant(0, 0, -Ti * Ti.transpose());
  cl.add_sym_term(0, n, Ti * sys.A() * T, P, In);
  cl.add_sym_term(0, n, Ti * sys.B(), Y, In);
  cl.add_variable(n, n, P);
  sdp.add_psd("closed_loop", cl);

  AffineExpr pI(n, n);
  pI.add_variable(0, 0, P).add_constant(0, 0, -Ti * Ti.transpose());
  sdp.add_psd("P_ge_I", pI);

  AffineExpr lb(m + n, m + n);
  lb.add_variable(0, 0, L);
  lb.add_sym_variable(0, m, Y);
  lb.add_variable(m, m, P);
  sdp.add_psd("L_block", lb);

  sdp.add_objective(P, T.transpose() * w.Wx * T);
  sdp.add_objective(L, w.Wu);
  return prog;
}

SynthesisProgram data_program(const DataMatrices& dm, const ProgramVariant& v, const Matrix& T) {
  if (std::holds_alternative<program::Ideal>(v)) {
    auto s = data_skeleton(dm, dm.X1 - *dm.D0, true, T);
    s.prog.variant = v;
    return std::move(s.prog);
  }
  if (std::holds_alternative<program::Baseline>(v)) {
    auto s = data_skeleton(dm, dm.X1, true, T);
    s.prog.variant = v;
    return std::move(s.prog);
  }
  if (const auto* soft = std::get_if<program::Soft>(&v)) {
    auto s = data_skeleton(dm, dm.X1, true, T);
    add_v_block(s, soft->alpha);
    s.prog.variant = v;
    return std::move(s.prog);
  }
  const auto& sp = std::get<program::SProc>(v);
  const int n = dm.n();
  auto s = data_skeleton(dm, dm.X1, false, T, &sp.R);
  SdpProblem& sdp = s.prog.sdp;
  const int r = static_cast<int>(s.prog.basis.cols());
  MatrixVariable V = sdp.add_variable("V", r, r, true);
  sdp.add_objective(V, s.prog.basis.transpose() * s.prog.basis);
  const Matrix Rs = s.Ti * sp.R * s.prog.basis;
  const Matrix In = Matrix::Identity(n, n);

  // Congruence by diag(Ti, I, Ti) of
  // [[P - mu^2 R V R' - I/eta1, 0, -X1 Q], [0, V, Q], [., ., P]] >= 0
  AffineExpr b(n + r + n, n + r + n);
  b.add_variable(0, 0, s.P);
  b.add_term(0, 0, Rs, V, Rs.transpose(), -sp.mu * sp.mu);
  b.add_constant(0, 0, -s.Ti * s.Ti.transpose() / sp.eta1);
  b.add_sym_term(0, n + r, s.X1s, s.q, In, -1.0);
  b.add_variable(n, n, V);
  b.add_sym_variable(n, n + r, s.q);
  b.add_variable(n + r, n + r, s.P);
  sdp.add_psd("sproc", b);
  s.prog.variant = v;
  return std::move(s.prog);
}

SynthesisProgram with_rebuild(const DataMatrices& dm, const ProgramVariant& v) {
  SynthesisProgram prog = data_program(dm, v, Matrix::Identity(dm.n(), dm.n()));
  prog.rebuild = [dm, v](const Matrix& T) { return data_program(dm, v, T); };
  return prog;
}

}  // namespace

std::string variant_name(const ProgramVariant& v) { return std::visit(Overloaded{}, v); }

SynthesisProgram build_model_based(const DiscreteLtiSystem& sys) {
  return build_model_based(sys, PerformanceWeights::identity(sys.n(), sys.m()));
}

SynthesisProgram build_model_based(const DiscreteLtiSystem& sys, const PerformanceWeights& w) {
  w.validate(sys.n(), sys.m());
  SynthesisProgram prog = model_based(sys, w, Matrix::Identity(sys.n(), sys.n()));
  prog.rebuild = [sys, w](const Matrix& T) { return model_based(sys, w, T); };
  return prog;
}

SynthesisProgram build_ideal(const DataMatrices& dm) {
  if (!dm.D0) throw MissingD0("ideal program needs the disturbance samples D0");
  return with_rebuild(dm, program::Ideal{});
}

SynthesisProgram build_baseline(const DataMatrices& dm) {
  return with_rebuild(dm, program::Baseline{});
}

SynthesisProgram build_soft(const DataMatrices& dm, double alpha) {
  if (!(alpha >= 1.0)) throw PreconditionViolation("soft program needs alpha >= 1");
  return with_rebuild(dm, program::Soft{alpha});
}

SynthesisProgram build_sproc(const DataMatrices& dm, double mu, const Matrix& R, double eta1) {
  if (!(mu > 0.0)) throw PreconditionViolation("S-procedure program needs mu > 0");
  if (!(eta1 >= 1.0)) throw PreconditionViolation("S-procedure program needs eta1 >= 1");
  const int n = dm.n();
  const int T = dm.samples();
  if (R.cols() != T || R.rows() < 1) throw DimensionMismatch("R must have T columns");
  if (numeric_rank(R) != R.rows()) throw PreconditionViolation("R must have full row rank");
  if (R.rows() != n) throw DimensionMismatch("R must be n x T");
  check_data(dm);
  return with_rebuild(dm, program::SProc{mu, R, eta1});
}

SynthesisProgram build_program(const DataMatrices& dm, const ProgramVariant& v) {
  if (std::holds_alternative<program::Ideal>(v)) return build_ideal(dm);
  if (std::holds_alternative<program::Baseline>(v)) return build_baseline(dm);
  if (const auto* soft = std::get_if<program::Soft>(&v)) return build_soft(dm, soft->alpha);
  if (const auto* sp = std::get_if<program::SProc>(&v)) return build_sproc(dm, sp->mu, sp->R, sp->eta1);
  throw PreconditionViolation("model-based program needs the system, not data");
}

SynthesisResult solve(const SynthesisProgram& prog) {
  return solve(prog, *default_backend());
}

namespace {

SynthesisResult solve_once(const SynthesisProgram& prog, const SolverBackend& backend,
                           const SolverSettings& settings, double tol_feas,
                           std::optional<Matrix>& P_hint) {
  const SolverOutput out = backend.solve(prog.sdp, settings);
  SynthesisResult r;
  r.status = out.status;
  r.iterations = out.iterations;
  r.message = out.message;
  r.rank_condition = prog.rank_condition;
  const SdpProblem& sdp = prog.sdp;
  if (out.y.size() != sdp.num_scalars() || !out.y.allFinite()) {
    if (r.status == SolverStatus::Optimal) {
      r.status = SolverStatus::NumericalFailure;
      r.message = "backend returned a malformed decision vector";
    }
    return r;
  }
  const Vector& y = out.y;
  const Matrix& T = prog.scale;
  r.P = sym(T * sdp.value(sdp.variable("P"), y) * T.transpose());
  if (r.status == SolverStatus::NumericalFailure) P_hint = r.P;
  if (r.status != SolverStatus::Optimal) return r;

  r.gamma = sdp.objective_value(y);
  r.L = sdp.value(sdp.variable("L"), y);
  r.h2_bound = r.P.trace() + r.L.trace();

  // Independent feasibility re-check on the returned point.
  double worst = std::numeric_limits<double>::infinity();
  bool feasible = true;
  for (int b = 0; feasible && b < static_cast<int>(sdp.blocks().size()); ++b) {
    const Matrix F = sdp.evaluate_block(b, y);
    Eigen::SelfAdjointEigenSolver<Matrix> es(F, Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues()(0);
    const double scale = std::max(1.0, F.cwiseAbs().maxCoeff());
    worst = std::min(worst, lmin / scale);
    if (lmin < -tol_feas * scale) feasible = false;
  }
  if (feasible && sdp.num_equalities() > 0) {
    const double scale = std::max(1.0, sdp.value(sdp.variable("P"), y).cwiseAbs().maxCoeff());
    feasible = sdp.equality_residual(y).cwiseAbs().maxCoeff() <= tol_feas * scale;
  }
  r.min_slack = worst;
  if (!feasible) {
    r.status = SolverStatus::NumericalFailure;
    r.message = "feasibility re-check failed";
    P_hint = r.P;
    return r;
  }

  Eigen::LLT<Matrix> cholP(r.P);
  if (cholP.info() != Eigen::Success) {
    r.status = SolverStatus::NumericalFailure;
    r.message = "P is not positive definite";
    return r;
  }
  if (std::holds_alternative<program::ModelBased>(prog.variant)) {
    const Matrix Y = sdp.value(sdp.variable("Y"), y) * T.transpose();
    r.K = cholP.solve(Y.transpose()).transpose();
    return r;
  }
  const Matrix& Nb = prog.basis;
  r.Q = Nb * sdp.value(sdp.variable("G"), y) * T.transpose();
  if (std::holds_alternative<program::Soft>(prog.variant) ||
      std::holds_alternative<program::SProc>(prog.variant)) {
    r.V = Nb * sdp.value(sdp.variable("V"), y) * Nb.transpose();
  }
  r.K = cholP.solve((prog.U0 * r.Q).transpose()).transpose();
  return r;
}

}  // namespace

SynthesisResult solve(const SynthesisProgram& prog, const SolverBackend& backend,
                      const SolverSettings& settings, double tol_feas) {
  std::optional<Matrix> hint;
  SynthesisResult r = solve_once(prog, backend, settings, tol_feas, hint);
  int iterations = r.iterations;
  // Badly scaled optima: re-pose in the coordinates P = T p T' with T T' the
  // approximate P of the failed run, which puts the optimum near p = I.
  for (int round = 0; round < 2 && r.status == SolverStatus::NumericalFailure && hint &&
                      prog.rebuild;
       ++round) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(*hint);
    const Vector lam = es.eigenvalues().cwiseMax(1.0);
    const Matrix Ph = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
    const Matrix T = Eigen::LLT<Matrix>(sym(Ph)).matrixL();
    hint.reset();
    const SynthesisProgram scaled = prog.rebuild(T);
    r = solve_once(scaled, backend, settings, tol_feas, hint);
    iterations += r.iterations;
    r.message += "; rescaled";
  }
  r.iterations = iterations;
  return r;
}

double mu_for_bound(double delta, const Matrix& R) {
  if (delta < 0.0) throw PreconditionViolation("delta must be nonnegative");
  Eigen::SelfAdjointEigenSolver<Matrix> es(R * R.transpose(), Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues()(0);
  if (!(lmin > 0.0)) throw PreconditionViolation("R must have full row rank");
  return std::max(delta / std::sqrt(lmin), std::numeric_limits<double>::min());
}

const std::vector<double>& default_eta1_grid() {
  static const std::vector<double> grid{1.0, 1.05, 1.1, 1.25, 1.5, 2.0, 3.0, 5.0, 10.0};
  return grid;
}

LineSearchResult sproc_line_search(const DataMatrices& dm, double mu, const Matrix& R,
                                   const std::vector<double>& eta_grid,
                                   std::optional<double> delta, const SolverBackend& backend,
                                   const SolverSettings& settings) {
  if (eta_grid.empty()) throw PreconditionViolation("empty eta1 grid");
  for (std::size_t i = 0; i < eta_grid.size(); ++i) {
    if (!(eta_grid[i] >= 1.0)) throw PreconditionViolation("eta1 grid values must be >= 1");
    if (i > 0 && !(eta_grid[i] > eta_grid[i - 1])) {
      throw PreconditionViolation("eta1 grid must be ascending");
    }
  }
  std::optional<LineSearchResult> fallback;
  for (double eta : eta_grid) {
    SynthesisResult res = solve(build_sproc(dm, mu, R, eta), backend, settings);
    if (res.status != SolverStatus::Optimal) continue;
    const bool certified =
        delta && data_only_sproc_check(*res.V, NoiseBound{*delta, NoiseBound::Rule::User}, mu, R);
    if (certified || !delta) return {std::move(res), eta, certified};
    if (!fallback) fallback = LineSearchResult{std::move(res), eta, false};
  }
  if (fallback) return std::move(*fallback);
  throw AllInfeasible("S-procedure program infeasible on the whole eta1 grid");
}

}  // namespace ddlqr
