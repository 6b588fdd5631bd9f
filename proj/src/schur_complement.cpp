#include "ddlqr/schur_complement.hpp"

#include <omp.h>

#include "ddlqr/errors.hpp"

namespace ddlqr {

SchurPlan::SchurPlan(const SdpProblem& problem)
    : problem_(&problem),
      num_scalars_(problem.num_scalars()),
      occurrences_(problem.num_scalars()) {
  const auto& blocks = problem.blocks();
  for (int b = 0; b < static_cast<int>(blocks.size()); ++b) {
    const auto& coeffs = blocks[b].coefficients;
    for (int k = 0; k < static_cast<int>(coeffs.size()); ++k) {
      occurrences_[coeffs[k].scalar].emplace_back(b, k);
    }
  }
}

void SchurPlan::assemble_row(int i, const std::vector<Matrix>& X,
                             const std::vector<Matrix>& Zinv, Matrix& M) const {
  const auto& blocks = problem_->blocks();
  for (const auto& [b, k] : occurrences_[i]) {
    const auto& coeffs = blocks[b].coefficients;
    const auto& Fi = coeffs[k].entries;
    const Matrix& Xb = X[b];
    const Matrix& Zb = Zinv[b];
    const int nb = blocks[b].size;

    // H = X F_i Zinv
    Matrix H;
    if (static_cast<int>(Fi.size()) <= nb) {
      H = Matrix::Zero(nb, nb);
      for (const auto& e : Fi) H.noalias() += e.value * Xb.col(e.row) * Zb.row(e.col);
    } else {
      Matrix XF = Matrix::Zero(nb, nb);
      for (const auto& e : Fi) XF.col(e.col) += e.value * Xb.col(e.row);
      H.noalias() = XF * Zb;
    }
    for (std::size_t kk = k; kk < coeffs.size(); ++kk) {
      double s = 0.0;
      for (const auto& e : coeffs[kk].entries) s += e.value * H(e.row, e.col);
      M(i, coeffs[kk].scalar) += s;
    }
  }
}

Matrix SchurPlan::assemble(const std::vector<Matrix>& X, const std::vector<Matrix>& Zinv,
                           bool parallel) const {
  const auto& blocks = problem_->blocks();
  if (X.size() != blocks.size() || Zinv.size() != blocks.size()) {
    throw DimensionMismatch("SchurPlan: block count mismatch");
  }
  Matrix M = Matrix::Zero(num_scalars_, num_scalars_);
  const int n = num_scalars_;
#pragma omp parallel for schedule(dynamic, 4) if (parallel && !omp_in_parallel())
  for (int i = 0; i < n; ++i) assemble_row(i, X, Zinv, M);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) M(j, i) = M(i, j);
  }
  return M;
}

Matrix schur_complement_reference(const SdpProblem& problem, const std::vector<Matrix>& X,
                                  const std::vector<Matrix>& Zinv) {
  const int n = problem.num_scalars();
  Matrix M = Matrix::Zero(n, n);
  const auto& blocks = problem.blocks();
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const int nb = blocks[b].size;
    std::vector<Matrix> dense(n);
    std::vector<int> present;
    for (const auto& c : blocks[b].coefficients) {
      Matrix F = Matrix::Zero(nb, nb);
      for (const auto& e : c.entries) F(e.row, e.col) += e.value;
      dense[c.scalar] = std::move(F);
      present.push_back(c.scalar);
    }
    for (int i : present) {
      for (int j : present) {
        M(i, j) += (dense[i] * X[b] * dense[j] * Zinv[b]).trace();
      }
    }
  }
  return M;
}

}  // namespace ddlqr
