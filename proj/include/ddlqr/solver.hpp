#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ddlqr/sdp.hpp"

namespace ddlqr {

enum class SolverStatus { Optimal, Infeasible, NumericalFailure };

const char* to_string(SolverStatus status);

/// Search direction of the interior-point method.
enum class SearchDirection { Hkm, Nt };

struct SolverSettings {
  double tolerance = 1e-8;          ///< relative gap and infeasibility targets
  double relaxed_tolerance = 1e-6;  ///< accepted when progress stalls
  int max_iterations = 100;
  bool parallel = true;             ///< OpenMP Schur-complement assembly
  SearchDirection direction = SearchDirection::Hkm;
  bool fallback = true;             ///< retry with the other direction on failure
  bool verbose = false;
};

struct SolverOutput {
  SolverStatus status = SolverStatus::NumericalFailure;
  Vector y;                ///< decision vector
  std::vector<Matrix> Z;   ///< slack blocks, Z = F0 + F(y)
  std::vector<Matrix> X;   ///< dual blocks
  Vector lambda;           ///< equality multipliers
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double relative_gap = 0.0;
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  int iterations = 0;
  std::string message;
};

/// Any conic backend that can solve an SdpProblem.
class SolverBackend {
 public:
  virtual ~SolverBackend() = default;
  virtual std::string name() const = 0;
  virtual SolverOutput solve(const SdpProblem& problem,
                             const SolverSettings& settings) const = 0;
};

/// Infeasible-start primal-dual path-following method with Mehrotra
/// predictor-corrector steps along the HKM or Nesterov-Todd direction. A run
/// that ends in NumericalFailure is repeated with the other direction when
/// `fallback` is set.
class InteriorPointSolver final : public SolverBackend {
 public:
  std::string name() const override { return "ipm"; }
  SolverOutput solve(const SdpProblem& problem,
                     const SolverSettings& settings) const override;
};

std::shared_ptr<const SolverBackend> default_backend();

}  // namespace ddlqr
