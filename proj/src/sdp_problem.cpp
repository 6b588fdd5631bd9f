#include <algorithm>
#include <tuple>

#include "ddlqr/errors.hpp"
#include "ddlqr/sdp.hpp"

namespace ddlqr {

int MatrixVariable::scalar_count() const {
  return symmetric ? rows * (rows + 1) / 2 : rows * cols;
}

int MatrixVariable::scalar_index(int i, int j) const {
  if (!symmetric) return offset + i * cols + j;
  if (i > j) std::swap(i, j);
  // Row-major upper triangle: rows before i contribute (rows - r) entries each.
  return offset + i * rows - i * (i - 1) / 2 + (j - i);
}

AffineExpr::AffineExpr(int rows, int cols) : constant_(Matrix::Zero(rows, cols)) {}

AffineExpr& AffineExpr::add_constant(int row0, int col0, const Matrix& C) {
  if (row0 + C.rows() > rows() || col0 + C.cols() > cols()) {
    throw DimensionMismatch("AffineExpr: constant block out of range");
  }
  constant_.block(row0, col0, C.rows(), C.cols()) += C;
  return *this;
}

AffineExpr& AffineExpr::add_sym_constant(int row0, int col0, const Matrix& C) {
  add_constant(row0, col0, C);
  if (row0 != col0) add_constant(col0, row0, C.transpose());
  return *this;
}

void AffineExpr::push_term(int row0, int col0, const Matrix& left,
                           const MatrixVariable& var, const Matrix& right,
                           double scale, bool transpose) {
  if (left.cols() != var.rows || right.rows() != var.cols) {
    throw DimensionMismatch("AffineExpr: factor shapes do not match variable '" +
                            var.name + "'");
  }
  const int p = static_cast<int>(left.rows());
  const int q = static_cast<int>(right.cols());
  const int out_rows = transpose ? q : p;
  const int out_cols = transpose ? p : q;
  if (row0 + out_rows > rows() || col0 + out_cols > cols()) {
    throw DimensionMismatch("AffineExpr: term block out of range");
  }
  auto emit = [&](int s, const Matrix& contrib) {
    for (int i = 0; i < p; ++i) {
      for (int j = 0; j < q; ++j) {
        const double v = scale * contrib(i, j);
        if (v == 0.0) continue;
        if (transpose) {
          terms_.push_back({s, row0 + j, col0 + i, v});
        } else {
          terms_.push_back({s, row0 + i, col0 + j, v});
        }
      }
    }
  };
  for (int a = 0; a < var.rows; ++a) {
    for (int b = var.symmetric ? a : 0; b < var.cols; ++b) {
      Matrix contrib = left.col(a) * right.row(b);
      if (var.symmetric && a != b) contrib += left.col(b) * right.row(a);
      emit(var.scalar_index(a, b), contrib);
    }
  }
}

AffineExpr& AffineExpr::add_term(int row0, int col0, const Matrix& left,
                                 const MatrixVariable& var, const Matrix& right,
                                 double scale) {
  push_term(row0, col0, left, var, right, scale, false);
  return *this;
}

AffineExpr& AffineExpr::add_variable(int row0, int col0, const MatrixVariable& var,
                                     double scale) {
  return add_term(row0, col0, Matrix::Identity(var.rows, var.rows), var,
                  Matrix::Identity(var.cols, var.cols), scale);
}

AffineExpr& AffineExpr::add_sym_term(int row0, int col0, const Matrix& left,
                                     const MatrixVariable& var, const Matrix& right,
                                     double scale) {
  push_term(row0, col0, left, var, right, scale, false);
  if (row0 != col0) push_term(col0, row0, left, var, right, scale, true);
  return *this;
}

AffineExpr& AffineExpr::add_sym_variable(int row0, int col0, const MatrixVariable& var,
                                         double scale) {
  return add_sym_term(row0, col0, Matrix::Identity(var.rows, var.rows), var,
                      Matrix::Identity(var.cols, var.cols), scale);
}

MatrixVariable SdpProblem::add_variable(const std::string& name, int rows,
                                         int cols, bool symmetric) {
  if (rows < 1 || cols < 1) throw PreconditionViolation("variable must be non-empty");
  if (symmetric && rows != cols) throw DimensionMismatch("symmetric variable must be square");
  for (const auto& v : variables_) {
    if (v.name == name) throw PreconditionViolation("duplicate variable '" + name + "'");
  }
  MatrixVariable var{name, rows, cols, symmetric, num_scalars_};
  num_scalars_ += var.scalar_count();
  variables_.push_back(var);
  const auto old = objective_.size();
  objective_.conservativeResize(num_scalars_);
  objective_.tail(num_scalars_ - old).setZero();
  finalize_equalities();
  return variables_.back();
}

const MatrixVariable& SdpProblem::variable(const std::string& name) const {
  for (const auto& v : variables_) {
    if (v.name == name) return v;
  }
  throw PreconditionViolation("unknown variable '" + name + "'");
}

void SdpProblem::add_psd(const std::string& name, const AffineExpr& expr) {
  if (expr.rows() != expr.cols()) throw DimensionMismatch("PSD expression must be square");
  PsdBlock block;
  block.name = name;
  block.size = expr.rows();
  block.constant = 0.5 * (expr.constant() + expr.constant().transpose());

  std::vector<AffineExpr::Term> terms;
  terms.reserve(2 * expr.terms().size());
  for (const auto& t : expr.terms()) {
    if (t.scalar < 0 || t.scalar >= num_scalars_) {
      throw PreconditionViolation("PSD expression references an undeclared variable");
    }
    terms.push_back({t.scalar, t.row, t.col, 0.5 * t.value});
    terms.push_back({t.scalar, t.col, t.row, 0.5 * t.value});
  }
  std::sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) {
    return std::tie(a.scalar, a.row, a.col) < std::tie(b.scalar, b.row, b.col);
  });
  for (std::size_t i = 0; i < terms.size();) {
    const int s = terms[i].scalar;
    BlockCoefficient coeff{s, {}};
    while (i < terms.size() && terms[i].scalar == s) {
      const int r = terms[i].row;
      const int c = terms[i].col;
      double v = 0.0;
      while (i < terms.size() && terms[i].scalar == s && terms[i].row == r &&
             terms[i].col == c) {
        v += terms[i].value;
        ++i;
      }
      if (v != 0.0) coeff.entries.push_back({r, c, v});
    }
    if (!coeff.entries.empty()) block.coefficients.push_back(std::move(coeff));
  }
  blocks_.push_back(std::move(block));
}

void SdpProblem::add_equality(const AffineExpr& expr) {
  // One row per entry (r, c) that carries coefficients.
  std::vector<std::vector<std::pair<int, double>>> rows(expr.rows() * expr.cols());
  for (const auto& t : expr.terms()) {
    if (t.scalar < 0 || t.scalar >= num_scalars_) {
      throw PreconditionViolation("equality references an undeclared variable");
    }
    rows[t.row * expr.cols() + t.col].emplace_back(t.scalar, t.value);
  }
  for (int r = 0; r < expr.rows(); ++r) {
    for (int c = 0; c < expr.cols(); ++c) {
      auto& row = rows[r * expr.cols() + c];
      std::sort(row.begin(), row.end());
      std::vector<std::pair<int, double>> merged;
      for (const auto& [s, v] : row) {
        if (!merged.empty() && merged.back().first == s) {
          merged.back().second += v;
        } else {
          merged.emplace_back(s, v);
        }
      }
      std::erase_if(merged, [](const auto& e) { return e.second == 0.0; });
      const double rhs = -expr.constant()(r, c);
      if (merged.empty()) {
        if (rhs != 0.0) throw PreconditionViolation("equality 0 = nonzero is infeasible");
        continue;
      }
      const int index = static_cast<int>(eq_rhs_.size());
      for (const auto& [s, v] : merged) eq_triplets_.emplace_back(index, s, v);
      eq_rhs_.conservativeResize(index + 1);
      eq_rhs_(index) = rhs;
    }
  }
  finalize_equalities();
}

void SdpProblem::finalize_equalities() {
  eq_matrix_.resize(static_cast<Eigen::Index>(eq_rhs_.size()), num_scalars_);
  eq_matrix_.setFromTriplets(eq_triplets_.begin(), eq_triplets_.end());
  eq_matrix_.makeCompressed();
}

void SdpProblem::add_objective(const MatrixVariable& var, const Matrix& weight) {
  if (weight.rows() != var.rows || weight.cols() != var.cols) {
    throw DimensionMismatch("objective weight shape differs from variable '" + var.name + "'");
  }
  for (int a = 0; a < var.rows; ++a) {
    for (int b = var.symmetric ? a : 0; b < var.cols; ++b) {
      double w = weight(a, b);
      if (var.symmetric && a != b) w += weight(b, a);
      objective_(var.scalar_index(a, b)) += w;
    }
  }
}

void SdpProblem::add_trace_objective(const MatrixVariable& var, double weight) {
  if (var.rows != var.cols) throw DimensionMismatch("trace of a non-square variable");
  add_objective(var, weight * Matrix::Identity(var.rows, var.cols));
}

int SdpProblem::cone_dimension() const {
  int total = 0;
  for (const auto& b : blocks_) total += b.size;
  return total;
}

Matrix SdpProblem::evaluate_block(int block, const Vector& y) const {
  const PsdBlock& b = blocks_.at(block);
  Matrix out = b.constant;
  for (const auto& coeff : b.coefficients) {
    const double ys = y(coeff.scalar);
    if (ys == 0.0) continue;
    for (const auto& e : coeff.entries) out(e.row, e.col) += ys * e.value;
  }
  return out;
}

Matrix SdpProblem::value(const MatrixVariable& var, const Vector& y) const {
  Matrix out(var.rows, var.cols);
  for (int i = 0; i < var.rows; ++i) {
    for (int j = 0; j < var.cols; ++j) out(i, j) = y(var.scalar_index(i, j));
  }
  return out;
}

Vector SdpProblem::equality_residual(const Vector& y) const {
  if (eq_rhs_.size() == 0) return Vector();
  return eq_matrix_ * y - eq_rhs_;
}

}  // namespace ddlqr
