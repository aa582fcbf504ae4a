#ifndef OUTID_IO_HPP
#define OUTID_IO_HPP

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <json.hpp>

#include "outid/bench.hpp"
#include "outid/signature.hpp"

namespace outid {

/// Round-trip-safe numeric formatting (17 significant digits).
inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Signature map as CSV: header "bus,<line ids...>", one row per PMU bus.
inline std::string map_to_csv(const SignatureMap& map) {
  std::ostringstream os;
  os << "bus";
  for (int id : map.line_ids) os << ",line_" << id;
  os << "\n";
  for (int i = 0; i < map.placement.size(); ++i) {
    os << map.placement.buses[static_cast<size_t>(i)];
    for (Eigen::Index j = 0; j < map.f.cols(); ++j)
      os << "," << format_number(map.f(i, j));
    os << "\n";
  }
  return os.str();
}

struct CsvMatrix {
  Eigen::MatrixXd values;       // numeric body, header/label column stripped
  std::vector<int> row_labels;  // first column when integral, else empty
  std::vector<std::string> header;
};

inline CsvMatrix read_csv(std::istream& in) {
  CsvMatrix out;
  std::string line;
  std::vector<std::vector<double>> rows;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (first) {
      first = false;
      bool numeric = true;
      for (const auto& c : cells) {
        try {
          size_t pos;
          std::stod(c, &pos);
          if (pos != c.size()) numeric = false;
        } catch (...) {
          numeric = false;
        }
      }
      if (!numeric) {
        out.header = cells;
        continue;
      }
    }
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(std::stod(c));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("empty CSV input");
  const size_t w = rows.front().size();
  for (const auto& r : rows)
    if (r.size() != w) throw std::runtime_error("ragged CSV input");
  // a leading label column is present when a header was seen
  const bool labeled = !out.header.empty();
  const size_t c0 = labeled ? 1 : 0;
  out.values.resize(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(w - c0));
  for (size_t i = 0; i < rows.size(); ++i) {
    if (labeled) out.row_labels.push_back(static_cast<int>(rows[i][0]));
    for (size_t j = c0; j < w; ++j)
      out.values(static_cast<Eigen::Index>(i),
                 static_cast<Eigen::Index>(j - c0)) = rows[i][j];
  }
  return out;
}

inline CsvMatrix read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_csv(in);
}

inline nlohmann::json config_to_json(const BenchmarkConfig& c) {
  nlohmann::json j;
  j["coverages"] = c.coverages;
  j["pmu_count_override"] = c.pmu_count_override;
  std::vector<std::string> kinds;
  for (auto k : c.kinds) kinds.push_back(to_string(k));
  j["kinds"] = kinds;
  j["runs"] = c.runs;
  j["double_count"] = c.double_count;
  j["rho_star"] = c.rho_star;
  j["gamma"] = c.gamma;
  j["max_steps"] = c.max_steps;
  j["noise_sigma_fraction"] = c.noise.sigma_fraction;
  j["noise_floor"] = c.noise.floor;
  j["pf_tolerance"] = c.pf.tolerance;
  j["pf_max_iterations"] = c.pf.max_iterations;
  j["seed"] = c.seed;
  return j;
}

inline nlohmann::json report_to_json(const BenchmarkReport& r,
                                     bool per_run_values = false) {
  nlohmann::json j;
  j["config"] = config_to_json(r.config);
  j["total_scenarios"] = r.total_scenarios;
  j["infeasible_scenarios"] = r.infeasible_scenarios;
  j["cells"] = nlohmann::json::array();
  for (const auto& c : r.cells) {
    nlohmann::json cj;
    cj["coverage"] = c.coverage;
    cj["kind"] = to_string(c.kind);
    cj["method"] = to_string(c.method);
    cj["mdc_augmented"] = c.mdc_augmented;
    cj["match"] = c.match;
    cj["q1"] = c.stats.q1;
    cj["median"] = c.stats.median;
    cj["q3"] = c.stats.q3;
    if (per_run_values) cj["per_run"] = c.per_run;
    j["cells"].push_back(cj);
  }
  return j;
}

}  // namespace outid

#endif  // OUTID_IO_HPP
