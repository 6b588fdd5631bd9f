#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ddlqr/data.hpp"
#include "ddlqr/lti.hpp"
#include "ddlqr/sdp.hpp"
#include "ddlqr/solver.hpp"

namespace ddlqr {

constexpr double kTolFeas = 1e-6;

namespace program {
struct ModelBased {};
struct Ideal {};
struct Baseline {};
struct Soft {
  double alpha = 1.0;
};
struct SProc {
  double mu = 0.0;
  Matrix R;  ///< n x T, full row rank
  double eta1 = 1.0;
};
}  // namespace program

using ProgramVariant = std::variant<program::ModelBased, program::Ideal, program::Baseline,
                                    program::Soft, program::SProc>;

std::string variant_name(const ProgramVariant& v);

/// An SDP together with what is needed to map its solution back to
/// (Q, P, L, V, K).
///
/// Data programs are posed on the row space of the data. With the thin SVD
/// W = U S N' of W = [U0; X0; X1] (X1 - D0 for the ideal program, R appended
/// for the S-procedure) and E = diag(1 / max(1, s_k)), the variables are
/// Q = N E g and V = N E v E N'. Constraints only see Q through W Q, and
/// dropping the components of Q and V outside range(N) never increases
/// trace(V), so the optimal values are unchanged.
///
/// All programs can be posed in the coordinates P = T p T' for an invertible
/// `scale` T (Q = N E g T', K P = y T' in the model-based program); this is an
/// exact congruence of every block. `rebuild` re-poses the program for a new T.
struct SynthesisProgram {
  SdpProblem sdp;
  ProgramVariant variant;
  int n = 0;
  int m = 0;
  int T = 0;           ///< 0 for the model-based program
  Matrix basis;        ///< N E, T x r
  Matrix U0;           ///< for decoding K
  Matrix scale;        ///< T, n x n
  std::function<SynthesisProgram(const Matrix&)> rebuild;
  bool rank_condition = true;
};

struct SynthesisResult {
  SolverStatus status = SolverStatus::NumericalFailure;
  double gamma = 0.0;      ///< optimal objective value
  double h2_bound = 0.0;   ///< trace(P) + trace(L)
  Matrix Q;                ///< T x n (data programs)
  Matrix P;
  Matrix L;
  std::optional<Matrix> V; ///< T x T (Soft, SProc)
  Matrix K;
  bool rank_condition = true;
  double min_slack = 0.0;  ///< smallest scaled block eigenvalue
  int iterations = 0;
  std::string message;
};

SynthesisProgram build_model_based(const DiscreteLtiSystem& sys);
SynthesisProgram build_model_based(const DiscreteLtiSystem& sys, const PerformanceWeights& w);
SynthesisProgram build_ideal(const DataMatrices& dm);
SynthesisProgram build_baseline(const DataMatrices& dm);
SynthesisProgram build_soft(const DataMatrices& dm, double alpha);
SynthesisProgram build_sproc(const DataMatrices& dm, double mu, const Matrix& R, double eta1);
SynthesisProgram build_program(const DataMatrices& dm, const ProgramVariant& v);

/// Solves, decodes K = U0 Q P^-1 and re-checks every block eigenvalue and the
/// equality residual against tol_feas, independently of the backend status.
SynthesisResult solve(const SynthesisProgram& prog, const SolverBackend& backend,
                      const SolverSettings& settings = {}, double tol_feas = kTolFeas);
SynthesisResult solve(const SynthesisProgram& prog);

/// Smallest mu with delta^2 I <= mu^2 R R'.
double mu_for_bound(double delta, const Matrix& R);

struct LineSearchResult {
  SynthesisResult result;
  double eta1 = 1.0;
  bool certified = false;  ///< the data-only V-check passed at eta1
};

/// Ascending grid search. Picks the first eta1 that is feasible and passes the
/// data-only V-check when `delta` is given; otherwise the first feasible one.
LineSearchResult sproc_line_search(const DataMatrices& dm, double mu, const Matrix& R,
                                   const std::vector<double>& eta_grid,
                                   std::optional<double> delta = std::nullopt,
                                   const SolverBackend& backend = *default_backend(),
                                   const SolverSettings& settings = {});

const std::vector<double>& default_eta1_grid();

}  // namespace ddlqr
