#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dial/experiment.hpp"
#include "dial/types.hpp"

namespace dial {

struct ResultRow {
  int client = 0;
  std::string osc = "all";  // OST index, or "all" for the client-level app view
  int phase = 0;
  int repeat = 0;
  double read_mbps = 0.0;
  double write_mbps = 0.0;
  double absorbed_mbps = 0.0;
};

struct ResultsFile {
  std::map<std::string, std::string> provenance;
  std::vector<ResultRow> rows;
};

inline std::string csv_escape(const std::string& s) { return s; }

// One row per (client, osc, phase, repeat); osc="all" rows carry the
// application-level view, numbered rows the per-OSC RPC view.
inline void append_run_rows(ResultsFile& file, const RunResult& result, int repeat,
                            std::uint32_t num_osts) {
  for (const auto& ph : result.phases) {
    for (int c = 0; c < int(ph.client_app_bytes.size()); ++c) {
      ResultRow row;
      row.client = c;
      row.osc = "all";
      row.phase = ph.phase;
      row.repeat = repeat;
      row.read_mbps = double(ph.client_app_bytes[c][0]) / ph.duration / 1e6;
      row.write_mbps = double(ph.client_app_bytes[c][1]) / ph.duration / 1e6;
      file.rows.push_back(row);
      for (std::uint32_t o = 0; o < num_osts; ++o) {
        ResultRow orow;
        orow.client = c;
        orow.osc = std::to_string(o);
        orow.phase = ph.phase;
        orow.repeat = repeat;
        orow.read_mbps = double(ph.osc_rpc_bytes[c][o][0]) / ph.duration / 1e6;
        orow.write_mbps = double(ph.osc_rpc_bytes[c][o][1]) / ph.duration / 1e6;
        orow.absorbed_mbps = double(ph.osc_absorbed_bytes[c][o]) / ph.duration / 1e6;
        file.rows.push_back(orow);
      }
    }
  }
}

inline void save_results_csv(const ResultsFile& file, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write results file: " + path);
  out << std::setprecision(17);
  for (const auto& [k, v] : file.provenance) out << "# " << k << "=" << v << "\n";
  out << "client,osc,phase,repeat,read_mbps,write_mbps,absorbed_mbps\n";
  for (const auto& r : file.rows)
    out << r.client << "," << r.osc << "," << r.phase << "," << r.repeat << "," << r.read_mbps
        << "," << r.write_mbps << "," << r.absorbed_mbps << "\n";
}

inline ResultsFile load_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open results file: " + path);
  ResultsFile file;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto sp = line.find(' ');
      const auto eq = line.find('=', sp);
      if (eq != std::string::npos)
        file.provenance[line.substr(sp + 1, eq - sp - 1)] = line.substr(eq + 1);
      continue;
    }
    if (!header_seen) {
      header_seen = true;  // column header
      continue;
    }
    std::stringstream ss(line);
    std::string tok;
    ResultRow r;
    std::getline(ss, tok, ',');
    r.client = std::stoi(tok);
    std::getline(ss, r.osc, ',');
    std::getline(ss, tok, ',');
    r.phase = std::stoi(tok);
    std::getline(ss, tok, ',');
    r.repeat = std::stoi(tok);
    std::getline(ss, tok, ',');
    r.read_mbps = std::stod(tok);
    std::getline(ss, tok, ',');
    r.write_mbps = std::stod(tok);
    std::getline(ss, tok, ',');
    r.absorbed_mbps = std::stod(tok);
    file.rows.push_back(r);
  }
  return file;
}

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;
  int n = 0;
};

inline MeanStd mean_std(const std::vector<double>& v) {
  MeanStd m;
  m.n = int(v.size());
  if (v.empty()) return m;
  for (double x : v) m.mean += x;
  m.mean /= double(v.size());
  for (double x : v) m.stddev += (x - m.mean) * (x - m.mean);
  m.stddev = v.size() > 1 ? std::sqrt(m.stddev / double(v.size() - 1)) : 0.0;
  return m;
}

// Aggregate app-level throughput (sum over clients) per repeat for one phase.
inline std::vector<double> aggregate_by_repeat(const ResultsFile& file, int phase, OpType op) {
  std::map<int, double> per_repeat;
  for (const auto& r : file.rows) {
    if (r.osc != "all" || r.phase != phase) continue;
    per_repeat[r.repeat] += op == OpType::Read ? r.read_mbps : r.write_mbps;
  }
  std::vector<double> out;
  for (const auto& [rep, v] : per_repeat) out.push_back(v);
  return out;
}

struct ReportLine {
  std::string workload;
  int phase = 0;
  MeanStd dflt, tuned, fixed;
  bool has_default = false, has_tuned = false, has_fixed = false;
};

// Normalized-vs-default presentation: tuned and fixed as multiples of the
// default run. Missing cells print NA rather than zero.
inline std::string render_report(const std::vector<ReportLine>& lines) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2);
  out << std::left << std::setw(22) << "workload" << std::setw(7) << "phase" << std::setw(16)
      << "default(MB/s)" << std::setw(16) << "tuned(MB/s)" << std::setw(16) << "optimal(MB/s)"
      << std::setw(12) << "tuned/def" << std::setw(12) << "opt/def" << "\n";
  for (const auto& l : lines) {
    auto cell = [&](bool has, const MeanStd& m) {
      std::ostringstream c;
      if (!has) return std::string("NA");
      c << std::fixed << std::setprecision(2) << m.mean << "+-" << m.stddev;
      return c.str();
    };
    auto ratio = [&](bool has, const MeanStd& m) {
      std::ostringstream c;
      if (!has || !l.has_default || l.dflt.mean == 0.0) return std::string("NA");
      c << std::fixed << std::setprecision(2) << m.mean / l.dflt.mean;
      return c.str();
    };
    out << std::left << std::setw(22) << l.workload << std::setw(7) << l.phase << std::setw(16)
        << cell(l.has_default, l.dflt) << std::setw(16) << cell(l.has_tuned, l.tuned)
        << std::setw(16) << cell(l.has_fixed, l.fixed) << std::setw(12)
        << ratio(l.has_tuned, l.tuned) << std::setw(12) << ratio(l.has_fixed, l.fixed) << "\n";
  }
  return out.str();
}

inline void save_report_csv(const std::vector<ReportLine>& lines, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report file: " + path);
  out << std::setprecision(17);
  out << "workload,phase,default_mbps,tuned_mbps,optimal_mbps,tuned_over_default,optimal_over_default\n";
  for (const auto& l : lines) {
    auto num = [&](bool has, double v) { return has ? std::to_string(v) : std::string("NA"); };
    out << l.workload << "," << l.phase << "," << num(l.has_default, l.dflt.mean) << ","
        << num(l.has_tuned, l.tuned.mean) << "," << num(l.has_fixed, l.fixed.mean) << ","
        << num(l.has_tuned && l.has_default && l.dflt.mean != 0, l.tuned.mean / l.dflt.mean) << ","
        << num(l.has_fixed && l.has_default && l.dflt.mean != 0, l.fixed.mean / l.dflt.mean)
        << "\n";
  }
}

}  // namespace dial
