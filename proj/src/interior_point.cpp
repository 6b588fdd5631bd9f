#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "ddlqr/errors.hpp"
#include "ddlqr/schur_complement.hpp"
#include "ddlqr/solver.hpp"

namespace ddlqr {

const char* to_string(SolverStatus status) {
  switch (status) {
    case SolverStatus::Optimal: return "Optimal";
    case SolverStatus::Infeasible: return "Infeasible";
    case SolverStatus::NumericalFailure: return "NumericalFailure";
  }
  return "?";
}

std::shared_ptr<const SolverBackend> default_backend() {
  static const auto backend = std::make_shared<InteriorPointSolver>();
  return backend;
}

namespace {

using Blocks = std::vector<Matrix>;

double inner(const Blocks& a, const Blocks& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i].cwiseProduct(b[i]).sum();
  return s;
}

double norm(const Blocks& a) { return std::sqrt(inner(a, a)); }

Matrix sym(const Matrix& A) { return 0.5 * (A + A.transpose()); }

// Largest step in [0, inf) keeping S + a*dS positive definite, given the
// Cholesky factor of S.
double max_step(const Eigen::LLT<Matrix>& chol, const Matrix& dS) {
  const Matrix& L = chol.matrixL();
  Matrix T = L.triangularView<Eigen::Lower>().solve(dS);
  T = L.triangularView<Eigen::Lower>().solve(T.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym(T), Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues()(0);
  if (lmin >= 0.0) return std::numeric_limits<double>::infinity();
  return -1.0 / lmin;
}

// Symmetric positive (semi)definite solve with Jacobi scaling and a small
// diagonal shift, factored in extended precision.
class RegularizedSolve {
 public:
  using Ext = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

  bool factor(const Matrix& M) {
    M_ = M;
    const int n = static_cast<int>(M.rows());
    d_ = Eigen::Matrix<long double, Eigen::Dynamic, 1>::Ones(n);
    for (int i = 0; i < n; ++i) {
      if (M(i, i) > 0.0) d_(i) = 1.0L / std::sqrt(static_cast<long double>(M(i, i)));
    }
    const Ext S = d_.asDiagonal() * M.cast<long double>() * d_.asDiagonal();
    for (long double eps = 1e-15L; eps <= 1e-3L; eps *= 100.0L) {
      Ext Se = S;
      Se.diagonal().array() += eps;
      llt_.compute(Se);
      if (llt_.info() == Eigen::Success) return true;
    }
    return false;
  }

  Matrix solve(const Matrix& rhs) const {
    const Ext b = rhs.cast<long double>();
    Ext x = d_.asDiagonal() * llt_.solve(d_.asDiagonal() * b);
    const Ext Me = M_.cast<long double>();
    for (int k = 0; k < 2; ++k) {
      const Ext r = b - Me * x;
      x += d_.asDiagonal() * llt_.solve(d_.asDiagonal() * r);
    }
    return x.cast<double>();
  }

  const Matrix& matrix() const { return M_; }

 private:
  Matrix M_;
  Eigen::Matrix<long double, Eigen::Dynamic, 1> d_;
  Eigen::LLT<Ext> llt_;
};

class Engine {
 public:
  Engine(const SdpProblem& p, const SolverSettings& s) : p_(p), s_(s), plan_(p) {
    nb_ = static_cast<int>(p.blocks().size());
    ns_ = p.num_scalars();
    ne_ = p.num_equalities();
    hkm_ = s.direction == SearchDirection::Hkm;
    F0_.reserve(nb_);
    for (const auto& b : p.blocks()) F0_.push_back(b.constant);
    c_ = p.objective();
    A_ = p.eq_matrix();
    b_ = p.eq_rhs();
    normF0_ = norm(F0_);
    normc_ = c_.norm();
    normb_ = b_.norm();
  }

  Blocks apply(const Vector& y) const {
    Blocks out;
    out.reserve(nb_);
    for (const auto& b : p_.blocks()) {
      Matrix m = Matrix::Zero(b.size, b.size);
      for (const auto& coeff : b.coefficients) {
        const double ys = y(coeff.scalar);
        if (ys == 0.0) continue;
        for (const auto& e : coeff.entries) m(e.row, e.col) += ys * e.value;
      }
      out.push_back(std::move(m));
    }
    return out;
  }

  Vector adjoint(const Blocks& X) const {
    Vector g = Vector::Zero(ns_);
    const auto& blocks = p_.blocks();
    for (int b = 0; b < nb_; ++b) {
      for (const auto& coeff : blocks[b].coefficients) {
        double s = 0.0;
        for (const auto& e : coeff.entries) s += e.value * X[b](e.row, e.col);
        g(coeff.scalar) += s;
      }
    }
    return g;
  }

  SolverOutput run();

 private:
  struct Direction {
    Vector dy, dlambda;
    Blocks dX, dZ;
  };

  // Nesterov-Todd scaling of one block: W = G G' with W Z W = X and
  // G' Z G = G^-1 X G^-T = diag(v).
  struct Scaling {
    Matrix G, Ginv, W;
    Vector v;
  };

  Direction direction(double sigma_mu, const Blocks* corr, const Matrix& MinvAt,
                      const RegularizedSolve& Msolve, const RegularizedSolve& Ssolve,
                      bool has_eq) const;

  const SdpProblem& p_;
  const SolverSettings& s_;
  SchurPlan plan_;
  int nb_ = 0, ns_ = 0, ne_ = 0;
  Blocks F0_;
  Vector c_, b_;
  Eigen::SparseMatrix<double> A_;
  double normF0_ = 0.0, normc_ = 0.0, normb_ = 0.0;

  // Iterate and derived quantities.
  Vector y_, lambda_;
  Blocks X_, Z_, Zinv_, R_;
  std::vector<Scaling> nt_;
  bool hkm_ = true;
  Vector rd_, re_;
};

Engine::Direction Engine::direction(double sigma_mu, const Blocks* corr, const Matrix& MinvAt,
                                    const RegularizedSolve& Msolve,
                                    const RegularizedSolve& Ssolve, bool has_eq) const {
  Blocks GSG(nb_), G(nb_);
  for (int b = 0; b < nb_ && hkm_; ++b) {
    Matrix T = X_[b] * R_[b];
    if (corr) T -= (*corr)[b];
    G[b] = sym(sigma_mu * Zinv_[b] - X_[b] + T * Zinv_[b]);
  }
  // Scaled complementarity: solve D S + S D = 2 sigma mu I - 2 D^2 - corr for
  // S with D = diag(v), then X-part = G S G'.
  for (int b = 0; b < nb_ && !hkm_; ++b) {
    const Scaling& sc = nt_[b];
    const int nb = static_cast<int>(sc.v.size());
    Matrix S(nb, nb);
    for (int i = 0; i < nb; ++i) {
      for (int j = 0; j < nb; ++j) {
        double rhs = corr ? -(*corr)[b](i, j) : 0.0;
        if (i == j) rhs += 2.0 * (sigma_mu - sc.v(i) * sc.v(i));
        S(i, j) = rhs / (sc.v(i) + sc.v(j));
      }
    }
    GSG[b] = sym(sc.G * S * sc.G.transpose());
    G[b] = GSG[b] + sym(sc.W * R_[b] * sc.W);
  }
  const Vector h = adjoint(G) - rd_;
  Direction d;
  // Solve [M -A'; A 0] (dy, dlambda) = (h, re), refined on the full system.
  auto reduced = [&](const Vector& r1, const Vector& r2, Vector& y, Vector& l) {
    const Vector u = Msolve.solve(r1);
    if (has_eq) {
      l = Ssolve.solve(r2 - A_ * u);
      y = u + MinvAt * l;
    } else {
      y = u;
    }
  };
  reduced(h, re_, d.dy, d.dlambda);
  const Matrix& M = Msolve.matrix();
  const double hn = std::max(1.0, h.norm() + (has_eq ? re_.norm() : 0.0));
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 4; ++k) {
    Vector r1 = h - M * d.dy;
    Vector r2;
    if (has_eq) {
      r1 += A_.transpose() * d.dlambda;
      r2 = re_ - A_ * d.dy;
    }
    const double rn = r1.norm() + (has_eq ? r2.norm() : 0.0);
    if (rn <= 1e-15 * hn || rn >= 0.5 * prev) break;
    prev = rn;
    Vector cy, cl;
    reduced(r1, r2, cy, cl);
    d.dy += cy;
    if (has_eq) d.dlambda += cl;
  }
  d.dZ = apply(d.dy);
  d.dX.resize(nb_);
  for (int b = 0; b < nb_; ++b) {
    d.dZ[b] -= R_[b];
    if (hkm_) {
      Matrix T = X_[b] * d.dZ[b];
      if (corr) T += (*corr)[b];
      d.dX[b] = sym(sigma_mu * Zinv_[b] - X_[b] - T * Zinv_[b]);
    } else {
      d.dX[b] = sym(GSG[b] - nt_[b].W * d.dZ[b] * nt_[b].W);
    }
  }
  return d;
}

SolverOutput Engine::run() {
  SolverOutput out;
  int cone = 0;
  for (const auto& b : p_.blocks()) cone += b.size;
  if (cone == 0) throw PreconditionViolation("SDP has no PSD blocks");

  double F0max = 0.0;
  for (const auto& F : F0_) F0max = std::max(F0max, F.cwiseAbs().maxCoeff());
  const double cmax = c_.size() ? c_.cwiseAbs().maxCoeff() : 0.0;
  const double xi = 10.0 * std::max({1.0, F0max, cmax});

  y_ = Vector::Zero(ns_);
  lambda_ = Vector::Zero(ne_);
  X_.clear();
  Z_.clear();
  for (const auto& b : p_.blocks()) {
    X_.push_back(xi * Matrix::Identity(b.size, b.size));
    Z_.push_back(xi * Matrix::Identity(b.size, b.size));
  }
  const bool has_eq = ne_ > 0;

  double pinf = 0.0, dinf = 0.0, gap = 0.0, pobj = 0.0, dobj = 0.0;
  struct Snapshot {
    double merit = std::numeric_limits<double>::infinity();
    double gap = 0.0, pinf = 0.0, dinf = 0.0, pobj = 0.0, dobj = 0.0;
    int iter = 0;
    Vector y, lambda;
    Blocks X, Z;
  } best;
  int stall = 0;
  std::string stop_reason = "iteration limit";
  int iter = 0;
  for (;; ++iter) {
    // Residuals.
    const Blocks Fy = apply(y_);
    R_.resize(nb_);
    for (int b = 0; b < nb_; ++b) R_[b] = Z_[b] - F0_[b] - Fy[b];
    const Vector FX = adjoint(X_);
    rd_ = c_ - FX;
    if (has_eq) {
      rd_ -= A_.transpose() * lambda_;
      re_ = b_ - A_ * y_;
    } else {
      re_ = Vector();
    }
    pobj = c_.dot(y_);
    dobj = -inner(F0_, X_) + (has_eq ? b_.dot(lambda_) : 0.0);
    const double xz = inner(X_, Z_);
    gap = xz / (1.0 + std::abs(pobj) + std::abs(dobj));
    pinf = norm(R_) / (1.0 + normF0_);
    if (has_eq) pinf = std::max(pinf, re_.norm() / (1.0 + normb_));
    dinf = rd_.norm() / (1.0 + normc_);

    const double merit = std::max({gap, pinf, dinf});
    if (std::isfinite(merit) && merit < best.merit) {
      best = {merit, gap, pinf, dinf, pobj, dobj, iter, y_, lambda_, X_, Z_};
    }
    if (s_.verbose) {
      std::cerr << "ipm " << iter << " pobj " << pobj << " dobj " << dobj << " gap " << gap
                << " pinf " << pinf << " dinf " << dinf << '\n';
    }
    if (gap <= s_.tolerance && pinf <= s_.tolerance && dinf <= s_.tolerance) {
      out.status = SolverStatus::Optimal;
      stop_reason = "converged";
      break;
    }
    // Infeasibility certificate: X >= 0 with F*(X) + A'lambda ~ 0 and a
    // positive dual objective.
    if (pinf > s_.tolerance && dobj > 0.0 && (c_ - rd_).norm() / dobj <= s_.tolerance) {
      out.status = SolverStatus::Infeasible;
      stop_reason = "primal infeasibility certificate";
      break;
    }
    if (iter >= s_.max_iterations) break;
    if (best.merit <= s_.relaxed_tolerance && iter - best.iter >= 8) {
      stop_reason = "no further progress";
      break;
    }

    // Factorizations and scaling.
    nt_.resize(nb_);
    Zinv_.resize(nb_);
    std::vector<Eigen::LLT<Matrix>> cholZ(nb_), cholX(nb_);
    bool ok = true;
    for (int b = 0; b < nb_ && ok; ++b) {
      cholZ[b].compute(Z_[b]);
      cholX[b].compute(X_[b]);
      ok = cholZ[b].info() == Eigen::Success && cholX[b].info() == Eigen::Success;
      if (!ok) break;
      if (hkm_) {
        Zinv_[b] = sym(cholZ[b].solve(Matrix::Identity(Z_[b].rows(), Z_[b].cols())));
        continue;
      }
      const Matrix L = cholX[b].matrixL();
      Eigen::SelfAdjointEigenSolver<Matrix> es(sym(L.transpose() * Z_[b] * L));
      const Vector lam = es.eigenvalues();
      ok = lam.minCoeff() > 0.0;
      if (!ok) break;
      Scaling& sc = nt_[b];
      const Vector q = lam.array().pow(-0.25);
      sc.G = L * es.eigenvectors() * q.asDiagonal();
      const Matrix Linv = L.triangularView<Eigen::Lower>().solve(
          Matrix::Identity(L.rows(), L.cols()));
      sc.Ginv = q.cwiseInverse().asDiagonal() * es.eigenvectors().transpose() * Linv;
      sc.W = sym(sc.G * sc.G.transpose());
      sc.v = lam.cwiseSqrt();
    }
    if (!ok) {
      stop_reason = "lost positive definiteness";
      break;
    }
    Matrix M;
    if (hkm_) {
      M = plan_.assemble(X_, Zinv_, s_.parallel);
    } else {
      Blocks Wb(nb_);
      for (int b = 0; b < nb_; ++b) Wb[b] = nt_[b].W;
      M = plan_.assemble(Wb, Wb, s_.parallel);
    }
    RegularizedSolve Msolve, Ssolve;
    if (!Msolve.factor(M)) {
      stop_reason = "Schur complement factorization failed";
      break;
    }
    Matrix MinvAt;
    if (has_eq) {
      MinvAt = Msolve.solve(Matrix(A_.transpose()));
      const Matrix S = A_ * MinvAt;
      if (!Ssolve.factor(S)) {
        stop_reason = "equality Schur complement factorization failed";
        break;
      }
    }

    const double mu = xz / cone;
    auto step_lengths = [&](const Direction& d, double& ax, double& az) {
      ax = az = std::numeric_limits<double>::infinity();
      for (int b = 0; b < nb_; ++b) {
        ax = std::min(ax, max_step(cholX[b], d.dX[b]));
        az = std::min(az, max_step(cholZ[b], d.dZ[b]));
      }
    };

    // Predictor.
    const Direction pred = direction(0.0, nullptr, MinvAt, Msolve, Ssolve, has_eq);
    double ax = 0.0, az = 0.0;
    step_lengths(pred, ax, az);
    ax = std::min(1.0, ax);
    az = std::min(1.0, az);
    double xz_aff = 0.0;
    for (int b = 0; b < nb_; ++b) {
      xz_aff += (X_[b] + ax * pred.dX[b]).cwiseProduct(Z_[b] + az * pred.dZ[b]).sum();
    }
    const double sigma = std::min(1.0, std::pow(std::max(0.0, xz_aff / cone) / mu, 3));

    // Corrector.
    Blocks C(nb_);
    for (int b = 0; b < nb_ && hkm_; ++b) C[b] = pred.dX[b] * pred.dZ[b];
    for (int b = 0; b < nb_ && !hkm_; ++b) {
      const Matrix Xs = nt_[b].Ginv * pred.dX[b] * nt_[b].Ginv.transpose();
      const Matrix Zs = nt_[b].G.transpose() * pred.dZ[b] * nt_[b].G;
      C[b] = Xs * Zs + Zs * Xs;
    }
    const Direction d = direction(sigma * mu, &C, MinvAt, Msolve, Ssolve, has_eq);
    step_lengths(d, ax, az);
    const double gamma = 0.9 + 0.09 * std::min({1.0, ax, az});
    ax = std::min(1.0, gamma * ax);
    az = std::min(1.0, gamma * az);

    for (int b = 0; b < nb_; ++b) {
      X_[b] = sym(X_[b] + ax * d.dX[b]);
      Z_[b] = sym(Z_[b] + az * d.dZ[b]);
    }
    y_ += az * d.dy;
    if (has_eq) lambda_ += ax * d.dlambda;

    stall = (ax < 1e-7 && az < 1e-7) ? stall + 1 : 0;
    if (stall >= 3) {
      stop_reason = "stagnation";
      break;
    }
    if (!std::isfinite(y_.squaredNorm()) || !std::isfinite(norm(X_))) {
      stop_reason = "non-finite iterate";
      break;
    }
  }

  if (stop_reason != "converged" && stop_reason != "primal infeasibility certificate") {
    const double tol = s_.relaxed_tolerance;
    const double merit = std::max({gap, pinf, dinf});
    if (!(merit <= tol) && std::isfinite(best.merit) &&
        (best.merit <= tol || !(merit <= best.merit))) {
      y_ = best.y;
      lambda_ = best.lambda;
      X_ = best.X;
      Z_ = best.Z;
      gap = best.gap;
      pinf = best.pinf;
      dinf = best.dinf;
      pobj = best.pobj;
      dobj = best.dobj;
      stop_reason += "; best iterate from iteration " + std::to_string(best.iter);
    }
    if (std::isfinite(gap) && gap <= tol && pinf <= tol && dinf <= tol) {
      out.status = SolverStatus::Optimal;
      stop_reason += "; accepted at relaxed tolerance";
    } else if (pinf > tol && dobj > 0.0 && (c_ - rd_).norm() / dobj <= tol) {
      out.status = SolverStatus::Infeasible;
      stop_reason += "; infeasibility certificate at relaxed tolerance";
    } else {
      out.status = SolverStatus::NumericalFailure;
    }
  }
  out.y = y_;
  out.X = X_;
  out.Z = Z_;
  out.lambda = lambda_;
  out.primal_objective = pobj;
  out.dual_objective = dobj;
  out.relative_gap = gap;
  out.primal_infeasibility = pinf;
  out.dual_infeasibility = dinf;
  out.iterations = iter;
  out.message = stop_reason;
  return out;
}

}  // namespace

SolverOutput InteriorPointSolver::solve(const SdpProblem& problem,
                                        const SolverSettings& settings) const {
  SolverOutput out = Engine(problem, settings).run();
  if (out.status != SolverStatus::NumericalFailure || !settings.fallback) return out;
  SolverSettings other = settings;
  other.direction = settings.direction == SearchDirection::Hkm ? SearchDirection::Nt
                                                                 : SearchDirection::Hkm;
  SolverOutput retry = Engine(problem, other).run();
  retry.iterations += out.iterations;
  if (retry.status == SolverStatus::NumericalFailure) {
    out.iterations = retry.iterations;
    return out;
  }
  retry.message += other.direction == SearchDirection::Nt ? " (NT fallback)" : " (HKM fallback)";
  return retry;
}

}  // namespace ddlqr
