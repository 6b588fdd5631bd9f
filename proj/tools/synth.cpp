// synth: Monte Carlo front-end for data-driven LQR synthesis.
//
//   synth run      --config <file> [--scenario <label>] [--jobs <k>] [--seed <u64>] [--out <dir>]
//   synth pendulum --config <file> ...
//   synth table1   --out <dir>
//
// Every config key is also accepted as a flag of the same name. Exit code 0
// on a completed run, 2 on a configuration error.

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "ddlqr/errors.hpp"
#include "ddlqr/experiment.hpp"

using namespace ddlqr;

namespace {

constexpr int kConfigErrorExit = 2;

struct CommonOptions {
  std::string config_file;
  std::optional<std::string> scenario;
  std::optional<int> jobs;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::map<std::string, std::optional<std::string>> keys;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_file, "key=value config file");
  cmd->add_option("--scenario", o.scenario, "run only the scenario with this label");
  cmd->add_option("--jobs", o.jobs, "trial-loop threads (1 = serial)");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--out", o.out, "output directory");
  for (const auto& key : config_keys()) {
    if (key == "jobs") continue;
    const std::string flag = key.size() == 1 ? "-" + key : "--" + key;
    cmd->add_option(flag, o.keys[key], "config key '" + key + "'");
  }
}

std::map<std::string, std::string> resolve(const CommonOptions& o,
                                           std::map<std::string, std::string> defaults = {}) {
  std::map<std::string, std::string> kv = std::move(defaults);
  if (!o.config_file.empty()) {
    std::ifstream is(o.config_file);
    if (!is) throw ConfigError("cannot open config file '" + o.config_file + "'");
    for (auto& [k, v] : parse_config(is)) kv[k] = v;
  }
  for (const auto& [k, v] : o.keys) {
    if (v) kv[k] = *v;
  }
  if (o.jobs) kv["jobs"] = std::to_string(*o.jobs);
  if (o.seed) kv["master_seed"] = std::to_string(*o.seed);
  if (o.out) kv["output_path"] = *o.out;
  return kv;
}

void select_scenario(ExperimentConfig& cfg, const std::optional<std::string>& label) {
  if (!label) return;
  for (const auto& s : cfg.scenarios) {
    if (s.stream_label() == *label) {
      cfg.scenarios = {s};
      return;
    }
  }
  throw ConfigError("no scenario labelled '" + *label + "'");
}

std::string header(const std::string& command, const std::map<std::string, std::string>& kv) {
  nlohmann::json j;
  j["command"] = command;
  j["config"] = kv;
  return j.dump();
}

void print_rows(const std::vector<MetricsRow>& rows) {
  std::ostringstream os;
  write_table_md(os, rows);
  std::cout << os.str();
}

int run_linear(const CommonOptions& o, bool pendulum) {
  std::map<std::string, std::string> defaults;
  if (pendulum) defaults["noise"] = "none";
  const auto kv = resolve(o, defaults);
  ExperimentConfig cfg = config_from_map(kv);
  select_scenario(cfg, o.scenario);
  const auto results = pendulum ? run_pendulum(cfg) : run_monte_carlo(cfg);
  std::vector<MetricsRow> rows;
  std::vector<TrialRecord> trials;
  for (const auto& r : results) {
    rows.push_back(r.row);
    trials.insert(trials.end(), r.trials.begin(), r.trials.end());
  }
  std::ostringstream md;
  write_table_md(md, rows);
  emit_report(cfg.output_path, rows, trials, md.str(),
              header(pendulum ? "pendulum" : "run", kv));
  print_rows(rows);
  return 0;
}

int run_table1_cmd(const CommonOptions& o, int ensemble_N) {
  const auto kv = resolve(o);
  const ExperimentConfig cfg = config_from_map(kv);
  std::vector<TrialRecord> trials;
  const auto cols = run_table1(cfg, ensemble_N, &trials);
  std::vector<MetricsRow> rows;
  for (const auto& c : cols) {
    rows.push_back(c.forma);
    rows.push_back(c.formb);
    if (c.averaged) rows.push_back(*c.averaged);
  }
  std::ostringstream md;
  write_table1_md(md, cols);
  auto hk = kv;
  hk["table1_ensemble_N"] = std::to_string(ensemble_N);
  emit_report(cfg.output_path, rows, trials, md.str(), header("table1", hk));
  std::cout << md.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data-driven LQR synthesis experiments"};
  app.require_subcommand(1);
  CommonOptions run_opts, pend_opts, table_opts;
  int ensemble_N = 100;
  CLI::App* run = app.add_subcommand("run", "Monte Carlo over random linear systems");
  add_common(run, run_opts);
  CLI::App* pend = app.add_subcommand("pendulum", "Nonlinear inverted-pendulum experiment");
  add_common(pend, pend_opts);
  CLI::App* table = app.add_subcommand("table1", "Full Table 1 sweep");
  add_common(table, table_opts);
  table->add_option("--ensemble", ensemble_N, "cycles of the averaged rows");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigErrorExit;
  }
  try {
    if (run->parsed()) return run_linear(run_opts, false);
    if (pend->parsed()) return run_linear(pend_opts, true);
    return run_table1_cmd(table_opts, ensemble_N);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigErrorExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
