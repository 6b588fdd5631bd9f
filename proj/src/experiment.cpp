#include "ddlqr/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include <omp.h>

#include "ddlqr/errors.hpp"

namespace ddlqr {

const char* to_string(DeltaRule rule) {
  switch (rule) {
    case DeltaRule::Auto: return "auto";
    case DeltaRule::Wgn: return "wgn";
    case DeltaRule::Bias: return "bias";
    case DeltaRule::User: return "user";
  }
  return "auto";
}

DeltaRule parse_delta_rule(const std::string& text) {
  if (text == "auto") return DeltaRule::Auto;
  if (text == "wgn") return DeltaRule::Wgn;
  if (text == "bias") return DeltaRule::Bias;
  if (text == "user") return DeltaRule::User;
  throw ConfigError("delta_rule must be auto, wgn, bias or user, got '" + text + "'");
}

void ExperimentConfig::validate() const {
  if (num_systems < 1) throw ConfigError("num_systems must be >= 1");
  if (n < 1 || m < 1) throw ConfigError("n and m must be >= 1");
  if (T < n + m) throw ConfigError("T must be >= n + m");
  if (!(a_scale > 0.0)) throw ConfigError("a_scale must be > 0");
  if (scenarios.empty()) throw ConfigError("at least one noise scenario is required");
  for (const auto& s : scenarios) {
    try {
      s.validate();
    } catch (const Error& e) {
      throw ConfigError(std::string("noise: ") + e.what());
    }
  }
  if (program != "ideal" && program != "baseline" && program != "soft" && program != "sproc") {
    throw ConfigError("program must be ideal, baseline, soft or sproc, got '" + program + "'");
  }
  if (!(alpha >= 1.0)) throw ConfigError("alpha must be >= 1");
  if (ensemble_N < 1) throw ConfigError("ensemble_N must be >= 1");
  if (delta_rule == DeltaRule::User && !(delta >= 0.0)) {
    throw ConfigError("delta must be >= 0");
  }
  if (eta1_grid.empty()) throw ConfigError("eta1_grid is empty");
  for (std::size_t i = 0; i < eta1_grid.size(); ++i) {
    if (!(eta1_grid[i] >= 1.0)) throw ConfigError("eta1_grid values must be >= 1");
    if (i > 0 && !(eta1_grid[i] > eta1_grid[i - 1])) {
      throw ConfigError("eta1_grid must be ascending");
    }
  }
  if (jobs < 0) throw ConfigError("jobs must be >= 0");
  if (!(x0_std > 0.0)) throw ConfigError("x0_std must be > 0");
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  if (!(convergence_tol > 0.0)) throw ConfigError("convergence_tol must be > 0");
}

namespace {

std::optional<NoiseBound> resolve_bound(const ExperimentConfig& cfg, const NoiseSpec& noise,
                                        int n) {
  DeltaRule rule = cfg.delta_rule;
  if (rule == DeltaRule::Auto) {
    switch (noise.kind) {
      case NoiseKind::None: return NoiseBound::user(0.0);
      case NoiseKind::Wgn:
      case NoiseKind::WgnInput: rule = DeltaRule::Wgn; break;
      case NoiseKind::Bias:
      case NoiseKind::Sine: rule = DeltaRule::Bias; break;
    }
  }
  switch (rule) {
    case DeltaRule::Wgn: return NoiseBound::wgn_rule(noise.level, cfg.T, cfg.ensemble_N);
    case DeltaRule::Bias: return NoiseBound::bias_rule(noise.level, cfg.T, n);
    case DeltaRule::User: return NoiseBound::user(cfg.delta);
    case DeltaRule::Auto: break;
  }
  return std::nullopt;
}

ProgramVariant variant_for(const ExperimentConfig& cfg) {
  if (cfg.program == "ideal") return program::Ideal{};
  if (cfg.program == "baseline") return program::Baseline{};
  return program::Soft{cfg.alpha};
}

// Synthesis, verdicts and certificates shared by the linear and pendulum
// trials. `sys` is the true (or linearized) plant.
void synthesize(const ExperimentConfig& cfg, const DiscreteLtiSystem& sys,
                const DataMatrices& dm, const std::optional<NoiseBound>& bound,
                TrialRecord& rec) {
  const RiccatiSolution ric = solve_dare(sys);
  rec.h2_opt = h2_norm_squared(sys, ric.Kopt);
  if (bound) rec.delta = bound->delta;

  SynthesisResult res;
  ProgramVariant variant;
  if (cfg.program == "sproc") {
    const Matrix& R = dm.X1;
    const double delta = bound ? bound->delta : 0.0;
    const double mu = mu_for_bound(delta, R);
    rec.mu = mu;
    try {
      LineSearchResult ls = sproc_line_search(dm, mu, R, cfg.eta1_grid, delta);
      res = std::move(ls.result);
      rec.eta1 = ls.eta1;
      variant = program::SProc{mu, R, ls.eta1};
    } catch (const AllInfeasible& e) {
      rec.status = "Infeasible";
      rec.message = e.what();
      return;
    }
  } else {
    variant = variant_for(cfg);
    res = solve(build_program(dm, variant));
  }
  rec.status = to_string(res.status);
  rec.message = res.message;
  rec.iterations = res.iterations;
  if (res.status != SolverStatus::Optimal) return;

  rec.K = res.K;
  rec.h2_bound = res.P.trace() + res.L.trace();
  rec.stabilizing = is_schur(sys.closed_loop(res.K));
  if (rec.stabilizing) {
    rec.h2 = h2_norm_squared(sys, res.K);
    rec.rel_error = (*rec.h2 - rec.h2_opt) / rec.h2_opt;
  }

  CertificateContext data_ctx{&dm, bound, std::nullopt, false};
  rec.data_report = assemble_report(res, variant, data_ctx);
  const bool is_sproc = std::holds_alternative<program::SProc>(variant);
  rec.verified = is_sproc ? rec.data_report->sproc_check.value_or(false)
                          : rec.data_report->stability_check.value_or(false);

  if (dm.D0) {
    CertificateContext oracle_ctx{&dm, bound, std::nullopt, true};
    try {
      oracle_ctx.ideal = minimum_norm_ideal_optimum(sys, dm);
    } catch (const Error&) {
    }
    rec.oracle_report = assemble_report(res, variant, oracle_ctx);
  }
}

template <typename Fn>
void guarded(TrialRecord& rec, Fn&& fn) {
  try {
    fn();
  } catch (const NotStabilizable& e) {
    rec.status = "NotStabilizable";
    rec.message = e.what();
  } catch (const RankDeficient& e) {
    rec.status = "RankDeficient";
    rec.message = e.what();
  } catch (const DivergedTrajectory& e) {
    rec.status = "DivergedTrajectory";
    rec.message = e.what();
  } catch (const std::exception& e) {
    rec.status = "Error";
    rec.message = e.what();
  }
}

template <typename TrialFn>
std::vector<TrialRecord> run_trials(const ExperimentConfig& cfg, TrialFn&& trial) {
  std::vector<TrialRecord> out(cfg.num_systems);
  if (cfg.jobs == 1) {
    for (int k = 0; k < cfg.num_systems; ++k) out[k] = trial(k);
    return out;
  }
  const int threads = cfg.jobs > 0 ? cfg.jobs : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (int k = 0; k < cfg.num_systems; ++k) out[k] = trial(k);
  return out;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

}  // namespace

TrialRecord run_trial(const ExperimentConfig& cfg, const NoiseSpec& noise, int index) {
  TrialRecord rec;
  rec.index = index;
  rec.scenario = noise.stream_label();
  rec.program = cfg.program;
  guarded(rec, [&] {
    Rng rng(cfg.master_seed, index, "system");
    const Matrix A = cfg.a_scale * rng.normal_matrix(cfg.n, cfg.n);
    const Matrix B = rng.normal_matrix(cfg.n, cfg.m);
    const Vector x0 = rng.normal_vector(cfg.n);
    const Matrix U = rng.normal_matrix(cfg.m, cfg.T);
    const DiscreteLtiSystem sys(A, B);
    rec.open_loop_stable = is_schur(A);

    Rng nr(cfg.master_seed, index, noise.stream_label());
    std::vector<DataMatrices> cycles;
    cycles.reserve(cfg.ensemble_N);
    for (int c = 0; c < cfg.ensemble_N; ++c) {
      const Trajectory traj = simulate(sys, x0, U, noise, cfg.T, nr);
      if (c == 0) {
        try {
          rec.snr_db = snr_db(sys, traj);
        } catch (const ZeroNoise&) {
        }
      }
      cycles.push_back(build_data_matrices(traj));
    }
    DataMatrices dm = cfg.ensemble_N == 1
                          ? cycles.front()
                          : ensemble_average(cycles, EnsembleSpec{cfg.ensemble_N, true});
    if (cfg.ensemble_N > 1 && dm.D0 && cycles.front().D0) {
      const double d1 = cycles.front().D0->norm();
      if (d1 > 0.0) rec.d0_ratio = dm.D0->norm() / d1;
    }
    synthesize(cfg, sys, dm, resolve_bound(cfg, noise, cfg.n), rec);
  });
  return rec;
}

MetricsRow aggregate(const std::string& label, const std::string& program, int ensemble_N,
                     const std::vector<TrialRecord>& trials) {
  MetricsRow row;
  row.label = label;
  row.program = program;
  row.ensemble_N = ensemble_N;
  row.num_trials = static_cast<int>(trials.size());
  if (trials.empty()) return row;
  std::vector<double> errors;
  double snr = 0.0;
  int snr_count = 0, stab = 0, verified = 0, ol = 0;
  for (const auto& t : trials) {
    if (t.stabilizing) {
      ++stab;
      if (t.rel_error) errors.push_back(*t.rel_error);
    }
    if (t.verified) ++verified;
    if (t.open_loop_stable) ++ol;
    if (t.status == "Infeasible") ++row.num_infeasible;
    if (t.snr_db) {
      snr += *t.snr_db;
      ++snr_count;
    }
  }
  const double total = static_cast<double>(trials.size());
  row.S = 100.0 * stab / total;
  row.V = 100.0 * verified / total;
  row.open_loop_stable = 100.0 * ol / total;
  if (!errors.empty()) row.M = median(std::move(errors));
  if (snr_count > 0) row.mean_snr_db = snr / snr_count;
  return row;
}

ScenarioResult run_scenario(const ExperimentConfig& cfg, const NoiseSpec& noise) {
  ScenarioResult r;
  r.trials = run_trials(cfg, [&](int k) { return run_trial(cfg, noise, k); });
  r.row = aggregate(noise.stream_label(), cfg.program, cfg.ensemble_N, r.trials);
  return r;
}

std::vector<ScenarioResult> run_monte_carlo(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<ScenarioResult> out;
  for (const auto& noise : cfg.scenarios) out.push_back(run_scenario(cfg, noise));
  return out;
}

TrialRecord run_pendulum_trial(const ExperimentConfig& cfg, const NoiseSpec& noise, int index,
                               const PendulumParams& params) {
  if (noise.kind != NoiseKind::None && noise.kind != NoiseKind::WgnInput) {
    throw ConfigError("pendulum scenarios must be none or wgn_input");
  }
  TrialRecord rec;
  rec.index = index;
  rec.scenario = noise.stream_label();
  rec.program = cfg.program;
  guarded(rec, [&] {
    const DiscreteLtiSystem lin = pendulum_linearization(params);
    const StateUpdate f = pendulum_dynamics(params);
    const int n = lin.n();
    Rng rng(cfg.master_seed, index, "system");
    const Vector x0 = rng.normal_vector(n, cfg.x0_std);
    const Matrix U = rng.normal_matrix(lin.m(), cfg.T);
    rec.open_loop_stable = is_schur(lin.A());

    Rng nr(cfg.master_seed, index, noise.stream_label());
    const Matrix Xi = draw_disturbance(noise, lin.B(), cfg.T, nr);
    const Trajectory traj = simulate_nonlinear(f, x0, U, Xi);
    try {
      rec.snr_db = snr_db(lin, traj);
    } catch (const ZeroNoise&) {
    }
    DataMatrices dm = build_data_matrices(traj);
    // Everything the linearization does not explain: nonlinearity and noise.
    dm.D0 = dm.X1 - lin.A() * dm.X0 - lin.B() * dm.U0;
    ExperimentConfig local = cfg;
    local.n = n;
    local.m = lin.m();
    synthesize(local, lin, dm, resolve_bound(local, noise, n), rec);
    if (!rec.stabilizing) return;

    // Nonlinear closed loop from the trial's initial state.
    Vector x = x0;
    bool converged = false;
    for (int k = 0; k < cfg.horizon && x.allFinite(); ++k) {
      x = f(x, rec.K * x);
      if (x.norm() <= cfg.convergence_tol) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      rec.stabilizing = false;
      rec.rel_error.reset();
      rec.h2.reset();
      rec.message += "; nonlinear closed loop did not converge";
    }
  });
  return rec;
}

ScenarioResult run_pendulum_scenario(const ExperimentConfig& cfg, const NoiseSpec& noise,
                                     const PendulumParams& params) {
  ScenarioResult r;
  r.trials = run_trials(cfg, [&](int k) { return run_pendulum_trial(cfg, noise, k, params); });
  r.row = aggregate("pendulum/" + noise.stream_label(), cfg.program, 1, r.trials);
  return r;
}

std::vector<ScenarioResult> run_pendulum(const ExperimentConfig& cfg,
                                         const PendulumParams& params) {
  cfg.validate();
  for (const auto& noise : cfg.scenarios) {
    if (noise.kind != NoiseKind::None && noise.kind != NoiseKind::WgnInput) {
      throw ConfigError("pendulum scenarios must be none or wgn_input, got '" +
                        noise.stream_label() + "'");
    }
  }
  std::vector<ScenarioResult> out;
  for (const auto& noise : cfg.scenarios) out.push_back(run_pendulum_scenario(cfg, noise, params));
  return out;
}

std::vector<NoiseSpec> table1_scenarios() {
  return {NoiseSpec::wgn(0.01), NoiseSpec::wgn(0.03), NoiseSpec::wgn(0.05),
          NoiseSpec::wgn(0.1),  NoiseSpec::wgn(0.3),  NoiseSpec::wgn(0.5),
          NoiseSpec::bias(0.05), NoiseSpec::bias(0.1), NoiseSpec::sine(0.05),
          NoiseSpec::sine(0.1)};
}

std::vector<Table1Column> run_table1(const ExperimentConfig& base, int ensemble_N,
                                     std::vector<TrialRecord>* trials) {
  base.validate();
  if (ensemble_N < 1) throw ConfigError("ensemble_N must be >= 1");
  auto collect = [&](ScenarioResult&& r) {
    if (trials) {
      for (auto& t : r.trials) trials->push_back(std::move(t));
    }
    return r.row;
  };
  std::vector<Table1Column> cols;
  for (const auto& noise : table1_scenarios()) {
    Table1Column col;
    col.noise = noise;
    ExperimentConfig a = base;
    a.program = "soft";
    a.ensemble_N = 1;
    col.forma = collect(run_scenario(a, noise));
    ExperimentConfig b = a;
    b.program = "sproc";
    col.formb = collect(run_scenario(b, noise));
    if (noise.kind == NoiseKind::Wgn) {
      ExperimentConfig e = a;
      e.ensemble_N = ensemble_N;
      col.averaged = collect(run_scenario(e, noise));
    }
    cols.push_back(std::move(col));
  }
  return cols;
}

}  // namespace ddlqr
