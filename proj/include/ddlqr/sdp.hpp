#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "ddlqr/lti.hpp"

namespace ddlqr {

/// A named matrix of decision variables. Symmetric variables own the upper
/// triangle only (row-major order), general ones own every entry (row-major).
struct MatrixVariable {
  std::string name;
  int rows = 0;
  int cols = 0;
  bool symmetric = false;
  int offset = 0;  ///< index of the first scalar in the decision vector

  int scalar_count() const;
  /// Scalar index of entry (i, j).
  int scalar_index(int i, int j) const;
};

struct SparseEntry {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

/// Coefficient matrix of one scalar inside a PSD block, both symmetric halves
/// stored, rows/cols within the block.
struct BlockCoefficient {
  int scalar = 0;
  std::vector<SparseEntry> entries;
};

/// Constraint constant + sum_s y_s F_s >= 0 (PSD), coefficients sorted by scalar.
struct PsdBlock {
  std::string name;
  int size = 0;
  Matrix constant;
  std::vector<BlockCoefficient> coefficients;
};

/// Affine matrix expression in the scalar decision variables, assembled from
/// constant blocks and terms left * X * right placed at (row0, col0).
class AffineExpr {
 public:
  AffineExpr(int rows, int cols);

  int rows() const { return static_cast<int>(constant_.rows()); }
  int cols() const { return static_cast<int>(constant_.cols()); }

  AffineExpr& add_constant(int row0, int col0, const Matrix& C);
  AffineExpr& add_term(int row0, int col0, const Matrix& left,
                       const MatrixVariable& var, const Matrix& right,
                       double scale = 1.0);
  AffineExpr& add_variable(int row0, int col0, const MatrixVariable& var,
                           double scale = 1.0);

  /// Same as add_constant/add_term, but off-diagonal placements are mirrored
  /// to (col0, row0) with the transpose. Intended for symmetric block LMIs
  /// where only the upper blocks are written.
  AffineExpr& add_sym_constant(int row0, int col0, const Matrix& C);
  AffineExpr& add_sym_term(int row0, int col0, const Matrix& left,
                           const MatrixVariable& var, const Matrix& right,
                           double scale = 1.0);
  AffineExpr& add_sym_variable(int row0, int col0, const MatrixVariable& var,
                               double scale = 1.0);

  struct Term {
    int scalar;
    int row;
    int col;
    double value;
  };
  const Matrix& constant() const { return constant_; }
  const std::vector<Term>& terms() const { return terms_; }

 private:
  void push_term(int row0, int col0, const Matrix& left, const MatrixVariable& var,
                 const Matrix& right, double scale, bool transpose);

  Matrix constant_;
  std::vector<Term> terms_;
};

/// Solver-agnostic SDP:
///   minimize    c'y
///   subject to  F_b(y) = F_b0 + sum_s y_s F_bs >= 0   for every block b
///               A y = b
class SdpProblem {
 public:
  MatrixVariable add_variable(const std::string& name, int rows, int cols,
                                     bool symmetric);

  /// Adds (E + E')/2 >= 0; E must be square.
  void add_psd(const std::string& name, const AffineExpr& expr);

  /// Adds E(y) = 0 entrywise.
  void add_equality(const AffineExpr& expr);

  /// c += <W, X> for the variable X (W has X's shape).
  void add_objective(const MatrixVariable& var, const Matrix& weight);
  void add_trace_objective(const MatrixVariable& var, double weight = 1.0);

  int num_scalars() const { return num_scalars_; }
  int num_equalities() const { return static_cast<int>(eq_rhs_.size()); }
  const std::vector<MatrixVariable>& variables() const { return variables_; }
  const MatrixVariable& variable(const std::string& name) const;
  const std::vector<PsdBlock>& blocks() const { return blocks_; }
  const Vector& objective() const { return objective_; }
  const Eigen::SparseMatrix<double>& eq_matrix() const { return eq_matrix_; }
  const Vector& eq_rhs() const { return eq_rhs_; }

  /// Total order of the block-diagonal PSD cone.
  int cone_dimension() const;

  Matrix evaluate_block(int block, const Vector& y) const;
  Matrix value(const MatrixVariable& var, const Vector& y) const;
  double objective_value(const Vector& y) const { return objective_.dot(y); }
  Vector equality_residual(const Vector& y) const;

  /// Text serialization; see README for the format.
  void write(std::ostream& os) const;
  static SdpProblem read(std::istream& is);

 private:
  void finalize_equalities();

  std::vector<MatrixVariable> variables_;
  int num_scalars_ = 0;
  std::vector<PsdBlock> blocks_;
  Vector objective_;
  std::vector<Eigen::Triplet<double>> eq_triplets_;
  Eigen::SparseMatrix<double> eq_matrix_;
  Vector eq_rhs_;
};

}  // namespace ddlqr
