#pragma once

#include <Eigen/Dense>

namespace ddlqr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Margin used for every "stabilizing" verdict: rho(M) < 1 - kTolSchur.
inline constexpr double kTolSchur = 1e-9;

/// x(k+1) = A x(k) + B u(k).
class DiscreteLtiSystem {
 public:
  DiscreteLtiSystem(Matrix A, Matrix B);

  const Matrix& A() const { return A_; }
  const Matrix& B() const { return B_; }
  int n() const { return static_cast<int>(A_.rows()); }
  int m() const { return static_cast<int>(B_.cols()); }

  Matrix closed_loop(const Matrix& K) const;

 private:
  Matrix A_;
  Matrix B_;
};

/// Quadratic weights on state (PSD) and input (PD).
struct PerformanceWeights {
  Matrix Wx;
  Matrix Wu;

  static PerformanceWeights identity(int n, int m);
  void validate(int n, int m) const;
};

struct RiccatiSolution {
  Matrix X;
  Matrix Kopt;
  double residual = 0.0;
};

struct ClosedLoopMetrics {
  Matrix P;
  double h2sq = 0.0;
};

struct DareOptions {
  double tolerance = 1e-12;
  int max_iterations = 100000;
  double residual_tolerance = 1e-8;
};

/// Stabilizing solution of
///   A'XA - X - A'XB (Wu + B'XB)^{-1} B'XA + Wx = 0
/// computed by the structure-preserving doubling algorithm, followed by one
/// Newton (Hewer) refinement step. Kopt = -(Wu + B'XB)^{-1} B'XA.
/// Throws NotStabilizable when (A, B) fails the PBH test or the closed loop
/// is not Schur, NonConvergence when the iteration cap is hit.
RiccatiSolution solve_dare(const DiscreteLtiSystem& sys,
                           const PerformanceWeights& w,
                           const DareOptions& options = {});

RiccatiSolution solve_dare(const DiscreteLtiSystem& sys);

/// Frobenius norm of the DARE left-hand side at X.
double dare_residual(const DiscreteLtiSystem& sys, const PerformanceWeights& w,
                     const Matrix& X);

/// Unique P with Acl P Acl' - P + I = 0. Throws NotSchur.
Matrix controllability_gramian(const Matrix& Acl);

/// Solves Acl P Acl' - P + S = 0 for symmetric S. Throws NotSchur.
Matrix discrete_lyapunov(const Matrix& Acl, const Matrix& S);

ClosedLoopMetrics closed_loop_metrics(const DiscreteLtiSystem& sys,
                                      const Matrix& K);

/// trace(P) + trace(K P K'); throws NotSchur if A + BK is not Schur.
double h2_norm_squared(const DiscreteLtiSystem& sys, const Matrix& K);

/// trace(Wx P) + trace(Wu K P K').
double h2_norm_squared(const DiscreteLtiSystem& sys, const Matrix& K,
                       const PerformanceWeights& w);

double spectral_radius(const Matrix& M);

bool is_schur(const Matrix& M, double tol = kTolSchur);

/// PBH test on the eigenvalues with modulus >= 1.
bool is_stabilizable(const Matrix& A, const Matrix& B, double tol = 1e-9);

/// PBH test on (C, A) via duality.
bool is_detectable(const Matrix& A, const Matrix& C, double tol = 1e-9);

}  // namespace ddlqr
