#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ddlqr/lti.hpp"
#include "ddlqr/rng.hpp"

namespace ddlqr {

/// States are stored column-wise: x is n x (T+1), u is m x T, d is n x T.
struct Trajectory {
  Matrix x;
  Matrix u;
  std::optional<Matrix> d;

  int horizon() const { return static_cast<int>(u.cols()); }
};

/// Snapshot matrices U0 (m x T), X0 (n x T), X1 (n x T) and, in oracle
/// mode, the disturbance samples D0 (n x T).
struct DataMatrices {
  Matrix U0;
  Matrix X0;
  Matrix X1;
  std::optional<Matrix> D0;

  int n() const { return static_cast<int>(X0.rows()); }
  int m() const { return static_cast<int>(U0.rows()); }
  int samples() const { return static_cast<int>(X0.cols()); }

  /// W0 = [U0; X0].
  Matrix W0() const;
};

enum class NoiseKind { None, Wgn, WgnInput, Bias, Sine };

/// Disturbance model. Wgn draws d ~ N(0, sigma^2 I) on the full state.
/// WgnInput, Bias and Sine act through the input channel: d = B w with
/// w ~ N(0, sigma^2 I), w = kappa, or w = kappa sin(k) respectively, where
/// kappa is drawn once per experiment from uniform(-level, level).
struct NoiseSpec {
  NoiseKind kind = NoiseKind::None;
  double level = 0.0;  ///< sigma for Wgn/WgnInput, kappa_bar for Bias/Sine
  std::string label;   ///< stream label; derived from kind/level when empty

  static NoiseSpec none();
  static NoiseSpec wgn(double sigma);
  static NoiseSpec wgn_input(double sigma);
  static NoiseSpec bias(double kappa_bar);
  static NoiseSpec sine(double kappa_bar);

  /// Parses "none", "wgn:0.1", "wgn_input:0.1", "bias:0.05", "sine:0.05".
  static NoiseSpec parse(const std::string& text);

  std::string stream_label() const;
  void validate() const;
};

struct EnsembleSpec {
  int N = 1;
  bool shared_input = true;
};

/// Draws D (n x T) for one experiment.
Matrix draw_disturbance(const NoiseSpec& noise, const Matrix& B, int T, Rng& rng);

/// Exact recursion x(k+1) = A x(k) + B u(k) + d(k); d is recorded.
/// An empty D means no disturbance (recorded as zeros).
Trajectory simulate(const DiscreteLtiSystem& sys, const Vector& x0,
                    const Matrix& U, const Matrix& D);

Trajectory simulate(const DiscreteLtiSystem& sys, const Vector& x0,
                    const Matrix& U, const NoiseSpec& noise, int T, Rng& rng);

using StateUpdate = std::function<Vector(const Vector& x, const Vector& u)>;

/// x(k+1) = f(x(k), u(k)) + xi(k). Throws DivergedTrajectory on non-finite
/// states.
Trajectory simulate_nonlinear(const StateUpdate& f, const Vector& x0,
                              const Matrix& U, const Matrix& Xi);

/// Euler-discretized inverted pendulum around the upright equilibrium.
struct PendulumParams {
  double dt = 0.01;
  double mass = 1.0;
  double length = 1.0;
  double friction = 0.01;
  double gravity = 9.8;
};

StateUpdate pendulum_dynamics(const PendulumParams& p = {});

/// Jacobians of the pendulum map at (x, u) = (0, 0).
DiscreteLtiSystem pendulum_linearization(const PendulumParams& p = {});

DataMatrices build_data_matrices(const Trajectory& traj);

/// Block Hankel matrix of order s: (sigma*s) x (T-s+1). Z holds one sample
/// per column.
Matrix hankel(const Matrix& Z, int order);

/// SVD rank with threshold max(rows, cols) * eps * sigma_max.
int numeric_rank(const Matrix& M);

bool is_persistently_exciting(const Matrix& U, int order);

/// rank [U0; X0] == n + m.
bool rank_condition(const DataMatrices& dm);

/// Entrywise mean. A warning is appended to `warnings` (when non-null) if the
/// inputs differ across cycles.
DataMatrices ensemble_average(const std::vector<DataMatrices>& datasets,
                              const EnsembleSpec& spec,
                              std::vector<std::string>* warnings = nullptr);

/// 10 log10(sum |B u(k)|^2 / sum |d(k)|^2). Throws ZeroNoise.
double snr_db(const DiscreteLtiSystem& sys, const Trajectory& traj);

/// CSV with header k,x1..xn,u1..um,d1..dn; the final row (k = T) leaves
/// the u and d columns empty.
void write_csv(std::ostream& os, const Trajectory& traj);

/// CSV with header k,u0_1..,x0_1..,x1_1..[,d0_1..]; one row per column.
void write_csv(std::ostream& os, const DataMatrices& dm);

}  // namespace ddlqr
