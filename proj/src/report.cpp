#include <charconv>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "ddlqr/errors.hpp"
#include "ddlqr/experiment.hpp"

namespace ddlqr {

namespace {

std::string number(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

std::string opt_number(const std::optional<double>& v) { return v ? number(*v) : std::string(); }

nlohmann::json opt_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

nlohmann::json matrix_json(const Matrix& M) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < M.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\r\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void write_summary_csv(std::ostream& os, const std::vector<MetricsRow>& rows) {
  os << "label,program,ensemble_N,num_trials,mean_snr_db,S,M,V,num_infeasible,"
        "open_loop_stable\r\n";
  for (const auto& r : rows) {
    os << csv_field(r.label) << ',' << csv_field(r.program) << ',' << r.ensemble_N << ','
       << r.num_trials << ',' << opt_number(r.mean_snr_db) << ',' << number(r.S) << ','
       << opt_number(r.M) << ',' << number(r.V) << ',' << r.num_infeasible << ','
       << number(r.open_loop_stable) << "\r\n";
  }
}

std::string trial_to_json(const TrialRecord& t) {
  nlohmann::json j;
  j["index"] = t.index;
  j["scenario"] = t.scenario;
  j["program"] = t.program;
  j["snr_db"] = opt_json(t.snr_db);
  j["status"] = t.status;
  j["message"] = t.message;
  j["iterations"] = t.iterations;
  j["open_loop_stable"] = t.open_loop_stable;
  j["stabilizing"] = t.stabilizing;
  j["K"] = t.K.size() ? matrix_json(t.K) : nlohmann::json(nullptr);
  j["rel_error"] = opt_json(t.rel_error);
  j["h2"] = opt_json(t.h2);
  j["h2_opt"] = t.h2_opt;
  j["h2_bound"] = opt_json(t.h2_bound);
  j["delta"] = opt_json(t.delta);
  j["mu"] = opt_json(t.mu);
  j["eta1"] = opt_json(t.eta1);
  j["verified"] = t.verified;
  j["d0_ratio"] = opt_json(t.d0_ratio);
  j["data_report"] =
      t.data_report ? nlohmann::json::parse(to_json(*t.data_report)) : nlohmann::json(nullptr);
  j["oracle_report"] = t.oracle_report ? nlohmann::json::parse(to_json(*t.oracle_report))
                                       : nlohmann::json(nullptr);
  return j.dump();
}

void write_trials_jsonl(std::ostream& os, const std::vector<TrialRecord>& trials,
                        const std::string& header_json) {
  os << nlohmann::json{{"header", nlohmann::json::parse(header_json)}}.dump() << '\n';
  for (const auto& t : trials) os << trial_to_json(t) << '\n';
}

void write_table_md(std::ostream& os, const std::vector<MetricsRow>& rows) {
  os << "| Noise | Program | N | SNR (dB) | S | M | V |\n";
  os << "|---|---|---|---|---|---|---|\n";
  for (const auto& r : rows) {
    os << "| " << r.label << " | " << r.program << " | " << r.ensemble_N << " | "
       << (r.mean_snr_db ? fixed(*r.mean_snr_db, 1) : "-") << " | " << fixed(r.S, 0) << "% | "
       << (r.M ? fixed(*r.M, 4) : "-") << " | " << fixed(r.V, 0) << "% |\n";
  }
}

void write_table1_md(std::ostream& os, const std::vector<Table1Column>& columns) {
  auto pct = [](double v) { return fixed(v, 0) + "%"; };
  auto med = [](const std::optional<double>& v) { return v ? fixed(*v, 4) : std::string("-"); };
  os << "| Noise | SNR (dB) | S soft | S sproc | M soft | M sproc | V soft | V sproc "
        "| S ave | M ave | V ave |\n";
  os << "|---|---|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& c : columns) {
    os << "| " << c.noise.stream_label() << " | "
       << (c.forma.mean_snr_db ? fixed(*c.forma.mean_snr_db, 1) : "-") << " | "
       << pct(c.forma.S) << " | " << pct(c.formb.S) << " | " << med(c.forma.M) << " | "
       << med(c.formb.M) << " | " << pct(c.forma.V) << " | " << pct(c.formb.V) << " | ";
    if (c.averaged) {
      os << pct(c.averaged->S) << " | " << med(c.averaged->M) << " | " << pct(c.averaged->V);
    } else {
      os << "- | - | -";
    }
    os << " |\n";
  }
}

void emit_report(const std::string& dir, const std::vector<MetricsRow>& rows,
                 const std::vector<TrialRecord>& trials, const std::string& table_md,
                 const std::string& header_json) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory '" + dir + "': " + ec.message());
  auto write = [&](const std::string& name, auto&& body) {
    const fs::path path = fs::path(dir) / name;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open '" + path.string() + "' for writing");
    body(os);
    os.flush();
    if (!os) throw Error("write to '" + path.string() + "' failed");
  };
  write("summary.csv", [&](std::ostream& os) { write_summary_csv(os, rows); });
  write("trials.jsonl", [&](std::ostream& os) { write_trials_jsonl(os, trials, header_json); });
  write("table1.md", [&](std::ostream& os) { os << table_md; });
}

}  // namespace ddlqr
