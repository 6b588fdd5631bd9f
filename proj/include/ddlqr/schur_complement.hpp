#pragma once

#include <utility>
#include <vector>

#include "ddlqr/sdp.hpp"

namespace ddlqr {

/// Assembles the Schur complement M_ij = sum_b tr(F_bi X_b F_bj Zinv_b)
/// from the sparse block coefficients of an SdpProblem. The problem must
/// outlive the plan.
class SchurPlan {
 public:
  explicit SchurPlan(const SdpProblem& problem);

  /// Rows are distributed across OpenMP threads when `parallel` is set.
  /// Both paths perform the same floating-point operations in the same order,
  /// so their results are bitwise identical.
  Matrix assemble(const std::vector<Matrix>& X, const std::vector<Matrix>& Zinv,
                  bool parallel = true) const;

  int size() const { return num_scalars_; }

 private:
  void assemble_row(int i, const std::vector<Matrix>& X,
                    const std::vector<Matrix>& Zinv, Matrix& M) const;

  const SdpProblem* problem_;
  int num_scalars_;
  /// occurrences_[i] lists (block, coefficient index) pairs of scalar i.
  std::vector<std::vector<std::pair<int, int>>> occurrences_;
};

/// Dense evaluation of tr(F_i X F_j Zinv) for every pair; for testing.
Matrix schur_complement_reference(const SdpProblem& problem,
                                  const std::vector<Matrix>& X,
                                  const std::vector<Matrix>& Zinv);

}  // namespace ddlqr
