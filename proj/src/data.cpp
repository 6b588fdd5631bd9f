#include "ddlqr/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include <Eigen/SVD>

#include "ddlqr/errors.hpp"

namespace ddlqr {

Matrix DataMatrices::W0() const {
  Matrix W(m() + n(), samples());
  W << U0, X0;
  return W;
}

NoiseSpec NoiseSpec::none() { return {NoiseKind::None, 0.0, {}}; }
NoiseSpec NoiseSpec::wgn(double sigma) { return {NoiseKind::Wgn, sigma, {}}; }
NoiseSpec NoiseSpec::wgn_input(double sigma) { return {NoiseKind::WgnInput, sigma, {}}; }
NoiseSpec NoiseSpec::bias(double kappa_bar) { return {NoiseKind::Bias, kappa_bar, {}}; }
NoiseSpec NoiseSpec::sine(double kappa_bar) { return {NoiseKind::Sine, kappa_bar, {}}; }

NoiseSpec NoiseSpec::parse(const std::string& text) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  if (kind == "none") {
    if (colon != std::string::npos) throw ParseError("noise 'none' takes no level");
    return none();
  }
  if (colon == std::string::npos) throw ParseError("noise '" + text + "' needs a level");
  const std::string level_text = text.substr(colon + 1);
  double level = 0.0;
  const char* first = level_text.data();
  const char* last = first + level_text.size();
  auto [ptr, ec] = std::from_chars(first, last, level);
  if (ec != std::errc() || ptr != last) {
    throw ParseError("bad noise level in '" + text + "'");
  }
  NoiseSpec spec;
  if (kind == "wgn") {
    spec = wgn(level);
  } else if (kind == "wgn_input") {
    spec = wgn_input(level);
  } else if (kind == "bias") {
    spec = bias(level);
  } else if (kind == "sine") {
    spec = sine(level);
  } else {
    throw ParseError("unknown noise kind '" + kind + "'");
  }
  spec.label = text;
  spec.validate();
  return spec;
}

std::string NoiseSpec::stream_label() const {
  if (!label.empty()) return label;
  std::ostringstream os;
  switch (kind) {
    case NoiseKind::None: return "none";
    case NoiseKind::Wgn: os << "wgn:"; break;
    case NoiseKind::WgnInput: os << "wgn_input:"; break;
    case NoiseKind::Bias: os << "bias:"; break;
    case NoiseKind::Sine: os << "sine:"; break;
  }
  os << level;
  return os.str();
}

void NoiseSpec::validate() const {
  if (!(level >= 0.0) || !std::isfinite(level)) {
    throw PreconditionViolation("noise level must be finite and >= 0");
  }
}

Matrix draw_disturbance(const NoiseSpec& noise, const Matrix& B, int T, Rng& rng) {
  noise.validate();
  const int n = static_cast<int>(B.rows());
  const int m = static_cast<int>(B.cols());
  switch (noise.kind) {
    case NoiseKind::None:
      return Matrix::Zero(n, T);
    case NoiseKind::Wgn:
      return rng.normal_matrix(n, T, noise.level);
    case NoiseKind::WgnInput:
      return B * rng.normal_matrix(m, T, noise.level);
    case NoiseKind::Bias:
    case NoiseKind::Sine: {
      Vector kappa(m);
      for (int i = 0; i < m; ++i) kappa(i) = rng.uniform(-noise.level, noise.level);
      const Vector bk = B * kappa;
      Matrix D(n, T);
      for (int k = 0; k < T; ++k) {
        D.col(k) = noise.kind == NoiseKind::Bias ? bk : Vector(bk * std::sin(k));
      }
      return D;
    }
  }
  return Matrix::Zero(n, T);
}

Trajectory simulate(const DiscreteLtiSystem& sys, const Vector& x0,
                    const Matrix& U, const Matrix& D) {
  const int n = sys.n();
  const int T = static_cast<int>(U.cols());
  if (T < 1) throw PreconditionViolation("simulate: T must be >= 1");
  if (x0.size() != n || U.rows() != sys.m()) {
    throw DimensionMismatch("simulate: x0 or input dimension mismatch");
  }
  const bool has_d = D.size() > 0;
  if (has_d && (D.rows() != n || D.cols() != T)) {
    throw DimensionMismatch("simulate: disturbance must be n x T");
  }
  Trajectory traj;
  traj.u = U;
  traj.d = has_d ? D : Matrix::Zero(n, T);
  traj.x.resize(n, T + 1);
  traj.x.col(0) = x0;
  for (int k = 0; k < T; ++k) {
    Vector next = sys.A() * traj.x.col(k) + sys.B() * U.col(k);
    next += traj.d->col(k);
    traj.x.col(k + 1) = next;
  }
  return traj;
}

Trajectory simulate(const DiscreteLtiSystem& sys, const Vector& x0,
                    const Matrix& U, const NoiseSpec& noise, int T, Rng& rng) {
  if (U.cols() != T) throw DimensionMismatch("simulate: input length differs from T");
  return simulate(sys, x0, U, draw_disturbance(noise, sys.B(), T, rng));
}

Trajectory simulate_nonlinear(const StateUpdate& f, const Vector& x0,
                              const Matrix& U, const Matrix& Xi) {
  const int n = static_cast<int>(x0.size());
  const int T = static_cast<int>(U.cols());
  if (T < 1) throw PreconditionViolation("simulate_nonlinear: T must be >= 1");
  const bool has_xi = Xi.size() > 0;
  if (has_xi && (Xi.rows() != n || Xi.cols() != T)) {
    throw DimensionMismatch("simulate_nonlinear: xi must be n x T");
  }
  Trajectory traj;
  traj.u = U;
  traj.d = has_xi ? Xi : Matrix::Zero(n, T);
  traj.x.resize(n, T + 1);
  traj.x.col(0) = x0;
  for (int k = 0; k < T; ++k) {
    Vector next = f(traj.x.col(k), U.col(k));
    if (next.size() != n) throw DimensionMismatch("simulate_nonlinear: f changed dimension");
    next += traj.d->col(k);
    if (!next.allFinite()) {
      throw DivergedTrajectory("simulate_nonlinear: non-finite state at k=" +
                               std::to_string(k + 1));
    }
    traj.x.col(k + 1) = next;
  }
  return traj;
}

StateUpdate pendulum_dynamics(const PendulumParams& p) {
  return [p](const Vector& x, const Vector& u) {
    const double inertia = p.mass * p.length * p.length;
    Vector next(2);
    next(0) = x(0) + p.dt * x(1);
    next(1) = p.dt * p.gravity / p.length * std::sin(x(0)) +
              (1.0 - p.dt * p.friction / inertia) * x(1) + p.dt / inertia * u(0);
    return next;
  };
}

DiscreteLtiSystem pendulum_linearization(const PendulumParams& p) {
  const double inertia = p.mass * p.length * p.length;
  Matrix A(2, 2);
  A << 1.0, p.dt, p.dt * p.gravity / p.length, 1.0 - p.dt * p.friction / inertia;
  Matrix B(2, 1);
  B << 0.0, p.dt / inertia;
  return {A, B};
}

DataMatrices build_data_matrices(const Trajectory& traj) {
  const int T = traj.horizon();
  if (T < 1 || traj.x.cols() != T + 1) {
    throw PreconditionViolation("build_data_matrices: need x of length T+1 >= 2");
  }
  DataMatrices dm;
  dm.U0 = traj.u;
  dm.X0 = traj.x.leftCols(T);
  dm.X1 = traj.x.rightCols(T);
  if (traj.d) dm.D0 = *traj.d;
  return dm;
}

Matrix hankel(const Matrix& Z, int order) {
  const int sigma = static_cast<int>(Z.rows());
  const int T = static_cast<int>(Z.cols());
  if (order < 1) throw PreconditionViolation("hankel: order must be >= 1");
  if (order > T) throw PreconditionViolation("hankel: order exceeds signal length");
  const int cols = T - order + 1;
  Matrix H(sigma * order, cols);
  for (int i = 0; i < order; ++i) H.middleRows(i * sigma, sigma) = Z.middleCols(i, cols);
  return H;
}

int numeric_rank(const Matrix& M) {
  if (M.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(M);
  const auto& s = svd.singularValues();
  const double smax = s.size() > 0 ? s(0) : 0.0;
  if (smax == 0.0) return 0;
  const double tol = static_cast<double>(std::max(M.rows(), M.cols())) *
                     std::numeric_limits<double>::epsilon() * smax;
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > tol) ++rank;
  }
  return rank;
}

bool is_persistently_exciting(const Matrix& U, int order) {
  if (order < 1 || order > U.cols()) return false;
  return numeric_rank(hankel(U, order)) == U.rows() * order;
}

bool rank_condition(const DataMatrices& dm) {
  if (dm.samples() < dm.n() + dm.m()) return false;
  return numeric_rank(dm.W0()) == dm.n() + dm.m();
}

DataMatrices ensemble_average(const std::vector<DataMatrices>& datasets,
                              const EnsembleSpec& spec,
                              std::vector<std::string>* warnings) {
  if (spec.N < 1) throw PreconditionViolation("ensemble_average: N must be >= 1");
  if (datasets.empty()) throw PreconditionViolation("ensemble_average: empty dataset list");
  if (static_cast<int>(datasets.size()) != spec.N) {
    throw PreconditionViolation("ensemble_average: dataset count differs from N");
  }
  const DataMatrices& first = datasets.front();
  const bool all_d = std::all_of(datasets.begin(), datasets.end(),
                                 [](const DataMatrices& d) { return d.D0.has_value(); });
  DataMatrices avg;
  avg.U0 = Matrix::Zero(first.m(), first.samples());
  avg.X0 = Matrix::Zero(first.n(), first.samples());
  avg.X1 = Matrix::Zero(first.n(), first.samples());
  if (all_d) avg.D0 = Matrix::Zero(first.n(), first.samples());
  bool inputs_differ = false;
  for (const auto& d : datasets) {
    if (d.U0.rows() != first.U0.rows() || d.U0.cols() != first.U0.cols() ||
        d.X0.rows() != first.X0.rows() || d.X0.cols() != first.X0.cols() ||
        d.X1.rows() != first.X1.rows() || d.X1.cols() != first.X1.cols()) {
      throw DimensionMismatch("ensemble_average: datasets differ in shape");
    }
    if (d.U0 != first.U0) inputs_differ = true;
    avg.U0 += d.U0;
    avg.X0 += d.X0;
    avg.X1 += d.X1;
    if (all_d) *avg.D0 += *d.D0;
  }
  const double scale = 1.0 / static_cast<double>(datasets.size());
  avg.U0 *= scale;
  avg.X0 *= scale;
  avg.X1 *= scale;
  if (all_d) *avg.D0 *= scale;
  if (inputs_differ && warnings) {
    warnings->push_back(
        "ensemble_average: inputs differ across cycles; the averaged input need "
        "not be persistently exciting");
  }
  return avg;
}

double snr_db(const DiscreteLtiSystem& sys, const Trajectory& traj) {
  if (!traj.d) throw ZeroNoise("snr_db: trajectory has no disturbance record");
  const double noise = traj.d->squaredNorm();
  if (noise == 0.0) throw ZeroNoise("snr_db: disturbance is identically zero");
  const double signal = (sys.B() * traj.u).squaredNorm();
  return 10.0 * std::log10(signal / noise);
}

namespace {

void write_number(std::ostream& os, double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  os.write(buf, ptr - buf);
}

}  // namespace

void write_csv(std::ostream& os, const Trajectory& traj) {
  const int n = static_cast<int>(traj.x.rows());
  const int m = static_cast<int>(traj.u.rows());
  const int T = traj.horizon();
  os << "k";
  for (int i = 0; i < n; ++i) os << ",x" << i + 1;
  for (int i = 0; i < m; ++i) os << ",u" << i + 1;
  for (int i = 0; i < n; ++i) os << ",d" << i + 1;
  os << "\n";
  for (int k = 0; k <= T; ++k) {
    os << k;
    for (int i = 0; i < n; ++i) {
      os << ',';
      write_number(os, traj.x(i, k));
    }
    for (int i = 0; i < m; ++i) {
      os << ',';
      if (k < T) write_number(os, traj.u(i, k));
    }
    for (int i = 0; i < n; ++i) {
      os << ',';
      if (k < T && traj.d) write_number(os, (*traj.d)(i, k));
    }
    os << "\n";
  }
}

void write_csv(std::ostream& os, const DataMatrices& dm) {
  const int n = dm.n();
  const int m = dm.m();
  os << "k";
  for (int i = 0; i < m; ++i) os << ",u0_" << i + 1;
  for (int i = 0; i < n; ++i) os << ",x0_" << i + 1;
  for (int i = 0; i < n; ++i) os << ",x1_" << i + 1;
  if (dm.D0) {
    for (int i = 0; i < n; ++i) os << ",d0_" << i + 1;
  }
  os << "\n";
  for (int k = 0; k < dm.samples(); ++k) {
    os << k;
    auto put = [&](const Matrix& M) {
      for (int i = 0; i < M.rows(); ++i) {
        os << ',';
        write_number(os, M(i, k));
      }
    };
    put(dm.U0);
    put(dm.X0);
    put(dm.X1);
    if (dm.D0) put(*dm.D0);
    os << "\n";
  }
}

}  // namespace ddlqr
