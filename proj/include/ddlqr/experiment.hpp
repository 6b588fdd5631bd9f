#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ddlqr/certificates.hpp"
#include "ddlqr/data.hpp"
#include "ddlqr/synthesis.hpp"

namespace ddlqr {

enum class DeltaRule { Auto, Wgn, Bias, User };

const char* to_string(DeltaRule rule);
DeltaRule parse_delta_rule(const std::string& text);

/// Monte Carlo settings. Each entry of `scenarios` is one noise scenario run
/// on the same plants; `program` is one of ideal, baseline, soft, sproc.
struct ExperimentConfig {
  std::uint64_t master_seed = 1;
  int num_systems = 100;
  int n = 3;
  int m = 1;
  int T = 20;
  double a_scale = 1.0;  ///< A = a_scale * N(0, 1) entries
  std::vector<NoiseSpec> scenarios{NoiseSpec::none()};
  std::string program = "soft";
  double alpha = 1.0;
  int ensemble_N = 1;
  DeltaRule delta_rule = DeltaRule::Auto;  ///< Auto: wgn rule for WGN, bias rule otherwise
  double delta = 0.0;                      ///< used by DeltaRule::User
  std::vector<double> eta1_grid = default_eta1_grid();
  std::string output_path = "out";
  int jobs = 0;  ///< 0: OpenMP default, 1: serial trial loop

  // Pendulum only.
  double x0_std = 0.1;
  int horizon = 10000;
  double convergence_tol = 1e-6;

  /// Throws ConfigError.
  void validate() const;
};

/// Builds a config from key=value pairs; unknown keys and bad values throw
/// ConfigError. Keys mirror the ExperimentConfig fields, with `noise` a
/// comma-separated list of scenarios and `eta1_grid` a comma-separated list.
ExperimentConfig config_from_map(const std::map<std::string, std::string>& kv);

/// Parses UTF-8 key=value lines; '#' starts a comment. Throws ConfigError
/// with the line number.
std::map<std::string, std::string> parse_config(std::istream& is);

/// Keys accepted by config_from_map.
const std::vector<std::string>& config_keys();

struct TrialRecord {
  int index = 0;
  std::string scenario;
  std::string program;
  std::optional<double> snr_db;
  std::string status;          ///< solver status, or the exception kind
  std::string message;
  int iterations = 0;
  bool open_loop_stable = false;
  bool stabilizing = false;
  Matrix K;                         ///< empty unless the solve succeeded
  std::optional<double> rel_error;  ///< E_k, stabilizing trials only
  std::optional<double> h2;         ///< |T(K)|^2
  double h2_opt = 0.0;
  std::optional<double> h2_bound;   ///< trace(P) + trace(L)
  std::optional<double> delta;
  std::optional<double> mu;         ///< sproc
  std::optional<double> eta1;       ///< sproc line-search choice
  bool verified = false;            ///< data-only certificate passed
  std::optional<double> d0_ratio;   ///< |mean D0|_F / |D0 of cycle 1|_F
  std::optional<CertificateReport> data_report;
  std::optional<CertificateReport> oracle_report;
};

struct MetricsRow {
  std::string label;
  std::string program;
  int ensemble_N = 1;
  int num_trials = 0;
  std::optional<double> mean_snr_db;
  double S = 0.0;
  std::optional<double> M;
  double V = 0.0;
  int num_infeasible = 0;
  double open_loop_stable = 0.0;  ///< percentage, diagnostic
};

struct ScenarioResult {
  MetricsRow row;
  std::vector<TrialRecord> trials;
};

/// Runs one trial of a linear-system scenario.
TrialRecord run_trial(const ExperimentConfig& cfg, const NoiseSpec& noise, int index);

/// Aggregates S, M (median over stabilizing trials), V and the infeasible
/// count.
MetricsRow aggregate(const std::string& label, const std::string& program, int ensemble_N,
                     const std::vector<TrialRecord>& trials);

/// All trials of one scenario; the trial loop runs under OpenMP unless
/// cfg.jobs == 1. Results are identical for every job count.
ScenarioResult run_scenario(const ExperimentConfig& cfg, const NoiseSpec& noise);

/// run_scenario for every entry of cfg.scenarios.
std::vector<ScenarioResult> run_monte_carlo(const ExperimentConfig& cfg);

/// Inverted pendulum: n = 2, m = 1 from the model; scenarios must be none or
/// wgn_input (torque noise).
TrialRecord run_pendulum_trial(const ExperimentConfig& cfg, const NoiseSpec& noise, int index,
                               const PendulumParams& params = {});
ScenarioResult run_pendulum_scenario(const ExperimentConfig& cfg, const NoiseSpec& noise,
                                     const PendulumParams& params = {});
std::vector<ScenarioResult> run_pendulum(const ExperimentConfig& cfg,
                                         const PendulumParams& params = {});

/// One scenario column of Table 1: Soft and SProc rows, plus the ensemble
/// rows for WGN (empty otherwise).
struct Table1Column {
  NoiseSpec noise;
  MetricsRow forma;
  MetricsRow formb;
  std::optional<MetricsRow> averaged;
};

std::vector<NoiseSpec> table1_scenarios();

/// Runs the full sweep; `trials` collects every per-trial record when
/// non-null. `ensemble_N` is the cycle count of the averaged rows.
std::vector<Table1Column> run_table1(const ExperimentConfig& base, int ensemble_N = 100,
                                     std::vector<TrialRecord>* trials = nullptr);

// Reports.

/// RFC-4180 quoting: fields holding a comma, quote or line break are
/// enclosed in quotes with inner quotes doubled.
std::string csv_field(const std::string& text);

/// Header then one line per row.
void write_summary_csv(std::ostream& os, const std::vector<MetricsRow>& rows);

/// A header object, then one JSON object per trial.
void write_trials_jsonl(std::ostream& os, const std::vector<TrialRecord>& trials,
                        const std::string& header_json = "{}");

std::string trial_to_json(const TrialRecord& trial);

/// One Markdown row per scenario with the metrics of every row matching its
/// label.
void write_table_md(std::ostream& os, const std::vector<MetricsRow>& rows);
void write_table1_md(std::ostream& os, const std::vector<Table1Column>& columns);

/// Writes summary.csv, trials.jsonl and table1.md into `dir`, creating it.
/// Throws Error with the path on I/O failure.
void emit_report(const std::string& dir, const std::vector<MetricsRow>& rows,
                 const std::vector<TrialRecord>& trials, const std::string& table_md,
                 const std::string& header_json = "{}");

}  // namespace ddlqr
