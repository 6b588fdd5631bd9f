#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "ddlqr/errors.hpp"
#include "ddlqr/sdp.hpp"

namespace ddlqr {

namespace {

constexpr const char* kMagic = "ddlqr-sdp";
constexpr int kVersion = 1;

std::string fmt(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double parse_double(const std::string& token) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw ParseError("bad number '" + token + "'");
  }
  return v;
}

class Reader {
 public:
  explicit Reader(std::istream& is) : is_(is) {}

  std::string word() {
    std::string w;
    if (!(is_ >> w)) throw ParseError("unexpected end of SDP file");
    return w;
  }
  int integer() {
    const std::string w = word();
    int v = 0;
    auto [ptr, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
    if (ec != std::errc() || ptr != w.data() + w.size()) {
      throw ParseError("bad integer '" + w + "'");
    }
    return v;
  }
  double number() { return parse_double(word()); }
  void expect(const std::string& keyword) {
    const std::string w = word();
    if (w != keyword) throw ParseError("expected '" + keyword + "', got '" + w + "'");
  }

 private:
  std::istream& is_;
};

}  // namespace

void SdpProblem::write(std::ostream& os) const {
  os << kMagic << ' ' << kVersion << '\n';
  os << "variables " << variables_.size() << '\n';
  for (const auto& v : variables_) {
    os << v.name << ' ' << v.rows << ' ' << v.cols << ' ' << (v.symmetric ? 1 : 0) << '\n';
  }
  int nnz = 0;
  for (int i = 0; i < objective_.size(); ++i) nnz += objective_(i) != 0.0;
  os << "objective " << nnz << '\n';
  for (int i = 0; i < objective_.size(); ++i) {
    if (objective_(i) != 0.0) os << i << ' ' << fmt(objective_(i)) << '\n';
  }
  os << "blocks " << blocks_.size() << '\n';
  for (const auto& b : blocks_) {
    int nconst = 0;
    for (int r = 0; r < b.size; ++r) {
      for (int c = r; c < b.size; ++c) nconst += b.constant(r, c) != 0.0;
    }
    int ncoeff = 0;
    for (const auto& coeff : b.coefficients) {
      for (const auto& e : coeff.entries) ncoeff += e.row <= e.col;
    }
    os << "block " << b.name << ' ' << b.size << ' ' << nconst << ' ' << ncoeff << '\n';
    for (int r = 0; r < b.size; ++r) {
      for (int c = r; c < b.size; ++c) {
        if (b.constant(r, c) != 0.0) os << "c " << r << ' ' << c << ' ' << fmt(b.constant(r, c)) << '\n';
      }
    }
    for (const auto& coeff : b.coefficients) {
      for (const auto& e : coeff.entries) {
        if (e.row <= e.col) {
          os << "f " << coeff.scalar << ' ' << e.row << ' ' << e.col << ' ' << fmt(e.value) << '\n';
        }
      }
    }
  }
  os << "equalities " << eq_rhs_.size() << ' ' << eq_matrix_.nonZeros() << '\n';
  for (int r = 0; r < eq_rhs_.size(); ++r) os << "b " << r << ' ' << fmt(eq_rhs_(r)) << '\n';
  // Row-major order so the listing groups by equation.
  Eigen::SparseMatrix<double, Eigen::RowMajor> rows = eq_matrix_;
  for (int r = 0; r < rows.outerSize(); ++r) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(rows, r); it; ++it) {
      os << "a " << r << ' ' << it.col() << ' ' << fmt(it.value()) << '\n';
    }
  }
  os << "end\n";
}

SdpProblem SdpProblem::read(std::istream& is) {
  Reader in(is);
  in.expect(kMagic);
  if (in.integer() != kVersion) throw ParseError("unsupported SDP file version");
  SdpProblem p;
  in.expect("variables");
  const int nvars = in.integer();
  for (int i = 0; i < nvars; ++i) {
    const std::string name = in.word();
    const int rows = in.integer();
    const int cols = in.integer();
    const int sym = in.integer();
    p.add_variable(name, rows, cols, sym != 0);
  }
  in.expect("objective");
  const int nobj = in.integer();
  for (int i = 0; i < nobj; ++i) {
    const int s = in.integer();
    if (s < 0 || s >= p.num_scalars_) throw ParseError("objective index out of range");
    p.objective_(s) = in.number();
  }
  in.expect("blocks");
  const int nblocks = in.integer();
  for (int bi = 0; bi < nblocks; ++bi) {
    in.expect("block");
    const std::string name = in.word();
    const int size = in.integer();
    const int nconst = in.integer();
    const int ncoeff = in.integer();
    Matrix constant = Matrix::Zero(size, size);
    for (int k = 0; k < nconst; ++k) {
      in.expect("c");
      const int r = in.integer();
      const int c = in.integer();
      const double v = in.number();
      if (r < 0 || c < r || c >= size) throw ParseError("constant entry out of range");
      constant(r, c) = v;
      constant(c, r) = v;
    }
    PsdBlock block{name, size, constant, {}};
    for (int k = 0; k < ncoeff; ++k) {
      in.expect("f");
      const int s = in.integer();
      const int r = in.integer();
      const int c = in.integer();
      const double v = in.number();
      if (s < 0 || s >= p.num_scalars_ || r < 0 || c < r || c >= size) {
        throw ParseError("coefficient entry out of range");
      }
      if (block.coefficients.empty() || block.coefficients.back().scalar != s) {
        if (!block.coefficients.empty() && block.coefficients.back().scalar > s) {
          throw ParseError("coefficients must be sorted by scalar");
        }
        block.coefficients.push_back({s, {}});
      }
      auto& entries = block.coefficients.back().entries;
      entries.push_back({r, c, v});
      if (r != c) entries.push_back({c, r, v});
    }
    for (auto& coeff : block.coefficients) {
      std::sort(coeff.entries.begin(), coeff.entries.end(), [](const auto& a, const auto& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
      });
    }
    p.blocks_.push_back(std::move(block));
  }
  in.expect("equalities");
  const int neq = in.integer();
  const int nnz = in.integer();
  p.eq_rhs_ = Vector::Zero(neq);
  for (int r = 0; r < neq; ++r) {
    in.expect("b");
    const int row = in.integer();
    if (row != r) throw ParseError("equality rhs rows must be listed in order");
    p.eq_rhs_(r) = in.number();
  }
  for (int k = 0; k < nnz; ++k) {
    in.expect("a");
    const int r = in.integer();
    const int s = in.integer();
    const double v = in.number();
    if (r < 0 || r >= neq || s < 0 || s >= p.num_scalars_) {
      throw ParseError("equality entry out of range");
    }
    p.eq_triplets_.emplace_back(r, s, v);
  }
  p.finalize_equalities();
  in.expect("end");
  return p;
}

}  // namespace ddlqr
