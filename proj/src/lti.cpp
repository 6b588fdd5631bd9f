#include "ddlqr/lti.hpp"

#include <cmath>
#include <complex>
#include <string>

#include <Eigen/Eigenvalues>

#include "ddlqr/errors.hpp"

namespace ddlqr {

namespace {

Matrix symmetrized(const Matrix& M) { return 0.5 * (M + M.transpose()); }

// Dense Kronecker solve is fine up to n = 10 (100 unknowns).
constexpr int kKroneckerLimit = 10;

Matrix lyapunov_kronecker(const Matrix& Acl, const Matrix& S) {
  const int n = static_cast<int>(Acl.rows());
  const int nn = n * n;
  Matrix lhs = Matrix::Identity(nn, nn);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      lhs.block(i * n, j * n, n, n) -= Acl(i, j) * Acl;
    }
  }
  // Column-major vec: vec(A P A') = (A kron A) vec(P).
  Vector rhs = Eigen::Map<const Vector>(S.data(), nn);
  Vector p = lhs.partialPivLu().solve(rhs);
  return symmetrized(Eigen::Map<const Matrix>(p.data(), n, n));
}

Matrix lyapunov_smith(const Matrix& Acl, const Matrix& S) {
  Matrix P = S;
  Matrix Ak = Acl;
  for (int iter = 0; iter < 64; ++iter) {
    Matrix step = Ak * P * Ak.transpose();
    P += step;
    Ak = Ak * Ak;
    if (step.norm() <= 1e-15 * P.norm()) break;
  }
  return symmetrized(P);
}

}  // namespace

DiscreteLtiSystem::DiscreteLtiSystem(Matrix A, Matrix B)
    : A_(std::move(A)), B_(std::move(B)) {
  if (A_.rows() < 1 || A_.rows() != A_.cols()) {
    throw DimensionMismatch("A must be square with n >= 1");
  }
  if (B_.rows() != A_.rows() || B_.cols() < 1) {
    throw DimensionMismatch("B must be n x m with m >= 1");
  }
}

Matrix DiscreteLtiSystem::closed_loop(const Matrix& K) const {
  if (K.rows() != m() || K.cols() != n()) {
    throw DimensionMismatch("gain must be m x n");
  }
  return A_ + B_ * K;
}

PerformanceWeights PerformanceWeights::identity(int n, int m) {
  return {Matrix::Identity(n, n), Matrix::Identity(m, m)};
}

void PerformanceWeights::validate(int n, int m) const {
  if (Wx.rows() != n || Wx.cols() != n || Wu.rows() != m || Wu.cols() != m) {
    throw DimensionMismatch("weights do not match system dimensions");
  }
  if ((Wx - Wx.transpose()).norm() > 1e-10 * (1.0 + Wx.norm()) ||
      (Wu - Wu.transpose()).norm() > 1e-10 * (1.0 + Wu.norm())) {
    throw PreconditionViolation("weights must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> ex(Wx, Eigen::EigenvaluesOnly);
  if (ex.eigenvalues().minCoeff() < -1e-12 * (1.0 + Wx.norm())) {
    throw PreconditionViolation("Wx must be positive semidefinite");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eu(Wu, Eigen::EigenvaluesOnly);
  if (eu.eigenvalues().minCoeff() <= 0.0) {
    throw PreconditionViolation("Wu must be positive definite");
  }
}

double spectral_radius(const Matrix& M) {
  if (M.rows() != M.cols()) throw DimensionMismatch("spectral_radius: square matrix required");
  if (M.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(M, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

bool is_schur(const Matrix& M, double tol) { return spectral_radius(M) < 1.0 - tol; }

bool is_stabilizable(const Matrix& A, const Matrix& B, double tol) {
  const int n = static_cast<int>(A.rows());
  Eigen::EigenSolver<Matrix> es(A, false);
  const double scale = std::max(1.0, std::max(A.norm(), B.norm()));
  for (int i = 0; i < n; ++i) {
    const std::complex<double> lambda = es.eigenvalues()(i);
    if (std::abs(lambda) < 1.0 - tol) continue;
    Eigen::MatrixXcd pbh(n, n + B.cols());
    pbh.leftCols(n) = A.cast<std::complex<double>>() -
                      lambda * Eigen::MatrixXcd::Identity(n, n);
    pbh.rightCols(B.cols()) = B.cast<std::complex<double>>();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(pbh);
    if (svd.singularValues()(n - 1) <= 1e-10 * scale) return false;
  }
  return true;
}

bool is_detectable(const Matrix& A, const Matrix& C, double tol) {
  return is_stabilizable(A.transpose(), C.transpose(), tol);
}

double dare_residual(const DiscreteLtiSystem& sys, const PerformanceWeights& w,
                     const Matrix& X) {
  const Matrix& A = sys.A();
  const Matrix& B = sys.B();
  const Matrix BtXA = B.transpose() * X * A;
  const Matrix S = w.Wu + B.transpose() * X * B;
  const Matrix lhs = A.transpose() * X * A - X -
                     BtXA.transpose() * S.ldlt().solve(BtXA) + w.Wx;
  return lhs.norm();
}

namespace {

Matrix optimal_gain(const DiscreteLtiSystem& sys, const PerformanceWeights& w,
                    const Matrix& X) {
  const Matrix& B = sys.B();
  const Matrix S = w.Wu + B.transpose() * X * B;
  return -S.ldlt().solve(B.transpose() * X * sys.A());
}

}  // namespace

RiccatiSolution solve_dare(const DiscreteLtiSystem& sys,
                           const PerformanceWeights& w,
                           const DareOptions& options) {
  const int n = sys.n();
  w.validate(n, sys.m());
  if (!is_stabilizable(sys.A(), sys.B())) {
    throw NotStabilizable("solve_dare: (A, B) is not stabilizable");
  }
  // Wx = C'C; detectability of (C, A) is needed for a stabilizing solution.
  Eigen::SelfAdjointEigenSolver<Matrix> ex(w.Wx);
  const Matrix C = (ex.eigenvectors() *
                    ex.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal())
                       .transpose();
  if (!is_detectable(sys.A(), C)) {
    throw PreconditionViolation("solve_dare: (Wx, A) is not detectable");
  }

  Matrix A_k = sys.A();
  Matrix G_k = sys.B() * w.Wu.ldlt().solve(sys.B().transpose());
  Matrix H_k = w.Wx;
  const Matrix I = Matrix::Identity(n, n);
  bool converged = false;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const Matrix W = I + G_k * H_k;
    const auto W_lu = W.partialPivLu();
    const Matrix V1 = W_lu.solve(A_k);
    const Matrix V2 = W_lu.solve(G_k.transpose()).transpose();
    G_k += A_k * V2 * A_k.transpose();
    Matrix H_next = H_k + V1.transpose() * H_k * A_k;
    A_k = A_k * V1;
    const double gap = (H_next - H_k).norm();
    H_k = symmetrized(H_next);
    G_k = symmetrized(G_k);
    if (!H_k.allFinite()) break;
    if (gap <= options.tolerance * std::max(1.0, H_k.norm())) {
      converged = true;
      break;
    }
  }
  if (!converged) throw NonConvergence("solve_dare: doubling iteration did not converge");

  RiccatiSolution sol;
  sol.X = H_k;
  sol.Kopt = optimal_gain(sys, w, sol.X);
  sol.residual = dare_residual(sys, w, sol.X);

  // One Hewer step: X = Acl' X Acl + Wx + K' Wu K.
  const Matrix Acl = sys.closed_loop(sol.Kopt);
  if (is_schur(Acl)) {
    const Matrix S = w.Wx + sol.Kopt.transpose() * w.Wu * sol.Kopt;
    const Matrix X_ref = discrete_lyapunov(Acl.transpose(), S);
    const double res_ref = dare_residual(sys, w, X_ref);
    if (res_ref < sol.residual) {
      sol.X = X_ref;
      sol.Kopt = optimal_gain(sys, w, sol.X);
      sol.residual = res_ref;
    }
  }
  if (!is_schur(sys.closed_loop(sol.Kopt))) {
    throw NotStabilizable("solve_dare: closed loop is not Schur");
  }
  if (!(sol.residual <= options.residual_tolerance * std::max(1.0, sol.X.norm()))) {
    throw NonConvergence("solve_dare: residual " + std::to_string(sol.residual) +
                         " above tolerance");
  }
  return sol;
}

RiccatiSolution solve_dare(const DiscreteLtiSystem& sys) {
  return solve_dare(sys, PerformanceWeights::identity(sys.n(), sys.m()));
}

Matrix discrete_lyapunov(const Matrix& Acl, const Matrix& S) {
  if (Acl.rows() != Acl.cols() || S.rows() != Acl.rows() || S.cols() != Acl.cols()) {
    throw DimensionMismatch("discrete_lyapunov: shape mismatch");
  }
  const double rho = spectral_radius(Acl);
  if (!(rho < 1.0 - kTolSchur)) {
    throw NotSchur("closed loop spectral radius " + std::to_string(rho) + " >= 1");
  }
  if (Acl.rows() <= kKroneckerLimit) return lyapunov_kronecker(Acl, S);
  return lyapunov_smith(Acl, S);
}

Matrix controllability_gramian(const Matrix& Acl) {
  return discrete_lyapunov(Acl, Matrix::Identity(Acl.rows(), Acl.cols()));
}

ClosedLoopMetrics closed_loop_metrics(const DiscreteLtiSystem& sys, const Matrix& K) {
  ClosedLoopMetrics out;
  out.P = controllability_gramian(sys.closed_loop(K));
  out.h2sq = out.P.trace() + (K * out.P * K.transpose()).trace();
  return out;
}

double h2_norm_squared(const DiscreteLtiSystem& sys, const Matrix& K) {
  return closed_loop_metrics(sys, K).h2sq;
}

double h2_norm_squared(const DiscreteLtiSystem& sys, const Matrix& K,
                       const PerformanceWeights& w) {
  w.validate(sys.n(), sys.m());
  const Matrix P = controllability_gramian(sys.closed_loop(K));
  return (w.Wx * P).trace() + (w.Wu * K * P * K.transpose()).trace();
}

}  // namespace ddlqr
