#include <algorithm>
#include <charconv>
#include <istream>
#include <sstream>

#include "ddlqr/errors.hpp"
#include "ddlqr/experiment.hpp"

namespace ddlqr {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw ConfigError("invalid value '" + text + "' for key '" + key + "'");
  }
  return value;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "master_seed", "num_systems", "n",           "m",          "T",
      "a_scale",     "noise",       "program",     "alpha",      "ensemble_N",
      "delta_rule",  "delta",       "eta1_grid",   "output_path", "jobs",
      "x0_std",      "horizon",     "convergence_tol"};
  return keys;
}

std::map<std::string, std::string> parse_config(std::istream& is) {
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

ExperimentConfig config_from_map(const std::map<std::string, std::string>& kv) {
  ExperimentConfig cfg;
  const auto& keys = config_keys();
  for (const auto& [key, value] : kv) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw ConfigError("unknown key '" + key + "'");
    }
    if (key == "master_seed") {
      cfg.master_seed = parse_number<std::uint64_t>(key, value);
    } else if (key == "num_systems") {
      cfg.num_systems = parse_number<int>(key, value);
    } else if (key == "n") {
      cfg.n = parse_number<int>(key, value);
    } else if (key == "m") {
      cfg.m = parse_number<int>(key, value);
    } else if (key == "T") {
      cfg.T = parse_number<int>(key, value);
    } else if (key == "a_scale") {
      cfg.a_scale = parse_number<double>(key, value);
    } else if (key == "noise") {
      cfg.scenarios.clear();
      for (const auto& item : split_list(value)) {
        try {
          cfg.scenarios.push_back(NoiseSpec::parse(item));
        } catch (const Error& e) {
          throw ConfigError(std::string("noise: ") + e.what());
        }
      }
    } else if (key == "program") {
      cfg.program = value;
    } else if (key == "alpha") {
      cfg.alpha = parse_number<double>(key, value);
    } else if (key == "ensemble_N") {
      cfg.ensemble_N = parse_number<int>(key, value);
    } else if (key == "delta_rule") {
      cfg.delta_rule = parse_delta_rule(value);
    } else if (key == "delta") {
      cfg.delta = parse_number<double>(key, value);
    } else if (key == "eta1_grid") {
      cfg.eta1_grid.clear();
      for (const auto& item : split_list(value)) {
        cfg.eta1_grid.push_back(parse_number<double>(key, item));
      }
    } else if (key == "output_path") {
      cfg.output_path = value;
    } else if (key == "jobs") {
      cfg.jobs = parse_number<int>(key, value);
    } else if (key == "x0_std") {
      cfg.x0_std = parse_number<double>(key, value);
    } else if (key == "horizon") {
      cfg.horizon = parse_number<int>(key, value);
    } else if (key == "convergence_tol") {
      cfg.convergence_tol = parse_number<double>(key, value);
    }
  }
  cfg.validate();
  return cfg;
}

}  // namespace ddlqr
