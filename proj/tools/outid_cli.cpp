// Command-line front end: solve, map, identify, mdc, bench, sweep-noise,
// sweep-rho. Exit 0 on success, 1 on domain errors (file problems,
// non-convergence, dimension mismatches), 2 on usage errors. Diagnostics go
// to stderr; data goes to stdout or --out.

#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "outid/bench.hpp"
#include "outid/io.hpp"
#include "outid/lasso.hpp"
#include "outid/mdc.hpp"
#include "outid/network.hpp"
#include "outid/powerflow.hpp"
#include "outid/rng.hpp"
#include "outid/signature.hpp"

namespace {

using outid::format_number;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

outid::NetworkModel load_model(const std::string& path) {
  return outid::parse_case(read_file(path));
}

void write_output(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot open " + out_path);
  out << text;
}

/// Rebuild a signature map from its CSV serialization (map_to_csv layout:
/// header "bus,line_<id>...", one row per PMU bus).
outid::SignatureMap map_from_csv(const std::string& path) {
  const outid::CsvMatrix csv = outid::read_csv_file(path);
  outid::SignatureMap map;
  map.f = csv.values;
  if (!csv.row_labels.empty()) {
    map.placement.buses = csv.row_labels;
  } else {
    for (int i = 0; i < map.f.rows(); ++i) map.placement.buses.push_back(i + 1);
  }
  for (Eigen::Index j = 0; j < map.f.cols(); ++j) {
    int id = static_cast<int>(j) + 1;
    const size_t col = static_cast<size_t>(j) + 1;  // skip the "bus" cell
    if (col < csv.header.size()) {
      const std::string& h = csv.header[col];
      const size_t us = h.rfind('_');
      if (us != std::string::npos) id = std::stoi(h.substr(us + 1));
    }
    map.line_ids.push_back(id);
  }
  return map;
}

Eigen::VectorXd vector_from_csv(const std::string& path) {
  const outid::CsvMatrix csv = outid::read_csv_file(path);
  if (csv.values.cols() != 1)
    throw std::runtime_error(path + " must contain a single numeric column, got " +
                             std::to_string(csv.values.cols()) + " columns");
  return csv.values.col(0);
}

outid::PmuPlacement resolve_placement(const outid::NetworkModel& model,
                                      const std::vector<int>& pmus,
                                      double coverage, std::uint64_t seed) {
  if (!pmus.empty()) return outid::PmuPlacement::of(pmus, model.bus_count());
  outid::Rng rng(seed);
  return outid::sample_placement(model, coverage, rng);
}

std::vector<outid::OutageKind> parse_kinds(const std::vector<std::string>& ks) {
  std::vector<outid::OutageKind> out;
  for (const auto& k : ks) {
    if (k == "single") out.push_back(outid::OutageKind::Single);
    else if (k == "double") out.push_back(outid::OutageKind::Double);
    else
      throw CLI::ValidationError("--kind", "must be 'single' or 'double', got '" + k + "'");
  }
  return out;
}

// ---------------------------------------------------------------------------

int cmd_solve(const std::string& case_path, bool as_json, double tol,
              int max_iter) {
  const outid::NetworkModel model = load_model(case_path);
  outid::PowerFlowOptions opts;
  opts.tolerance = tol;
  opts.max_iterations = max_iter;
  const outid::SteadyState st = outid::solve_power_flow(model, opts);
  if (!st.converged) {
    std::cerr << "error: power flow did not converge after " << st.iterations
              << " iterations (residual " << format_number(st.residual)
              << ")\n";
    return 1;
  }
  const double deg = 180.0 / 3.14159265358979323846;
  if (as_json) {
    nlohmann::json j;
    j["converged"] = st.converged;
    j["iterations"] = st.iterations;
    j["residual"] = st.residual;
    std::vector<double> theta, vmag;
    for (int i = 0; i < model.bus_count(); ++i) {
      theta.push_back(st.theta(i) * deg);
      vmag.push_back(st.vmag(i));
    }
    j["theta_deg"] = theta;
    j["vmag_pu"] = vmag;
    std::cout << j.dump(2) << "\n";
    return 0;
  }
  std::cout << "bus,theta_deg,vmag_pu\n";
  for (int i = 0; i < model.bus_count(); ++i)
    std::cout << (i + 1) << "," << format_number(st.theta(i) * deg) << ","
              << format_number(st.vmag(i)) << "\n";
  std::cerr << "converged in " << st.iterations << " iterations, residual "
            << format_number(st.residual) << "\n";
  return 0;
}

int cmd_map(const std::string& case_path, const std::vector<int>& pmus,
            double coverage, std::uint64_t seed, bool dc,
            const std::string& out_path) {
  const outid::NetworkModel model = load_model(case_path);
  const outid::PmuPlacement placement =
      resolve_placement(model, pmus, coverage, seed);
  outid::SignatureMap map;
  if (dc) {
    map = outid::dc_signature_map(model, placement);
  } else {
    const outid::SteadyState st = outid::solve_power_flow(model);
    if (!st.converged) {
      std::cerr << "error: base-case power flow did not converge\n";
      return 1;
    }
    map = outid::build_signature_map(model, st, placement);
  }
  write_output(out_path, outid::map_to_csv(map));
  return 0;
}

int cmd_identify(const std::string& map_path, const std::string& dtheta_path,
                 double gamma, int top_k, int max_steps,
                 const std::string& path_csv) {
  const outid::SignatureMap map = map_from_csv(map_path);
  const Eigen::VectorXd dtheta = vector_from_csv(dtheta_path);
  if (dtheta.size() != map.f.rows())
    throw std::runtime_error("measurement has " + std::to_string(dtheta.size()) +
                             " entries but the map has " +
                             std::to_string(map.f.rows()) + " PMU rows");

  const outid::StandardizedDesign design = outid::standardize(map);
  const int q = max_steps > 0
                    ? max_steps
                    : outid::default_path_steps(static_cast<int>(map.f.rows()),
                                                static_cast<int>(map.f.cols()));
  const outid::LassoPath path = outid::lars_path(design, dtheta, q);

  outid::SelectionRule rule;
  if (top_k > 0) {
    rule.kind = outid::SelectionRule::Kind::TopK;
    rule.k = top_k;
  } else {
    rule.gamma = gamma;
  }
  const outid::IdentificationResult res = outid::select_outages(path, rule);

  std::cout << "selected_line,coefficient\n";
  for (size_t i = 0; i < res.selected_lines.size(); ++i)
    std::cout << res.selected_lines[i] << ","
              << format_number(res.coefficients[i]) << "\n";
  std::cout << "lambda_sequence";
  for (double l : path.lambdas) std::cout << "," << format_number(l);
  std::cout << "\n";
  if (path.degenerate)
    std::cerr << "warning: collinear active set encountered; consider the "
                 "cluster view (mdc)\n";

  if (!path_csv.empty()) {
    std::ostringstream os;
    os << "step,lambda";
    for (int id : map.line_ids) os << ",line_" << id;
    os << "\n";
    for (size_t s = 0; s < path.lambdas.size(); ++s) {
      os << s << "," << format_number(path.lambdas[s]);
      for (Eigen::Index j = 0; j < path.betas[s].size(); ++j)
        os << "," << format_number(path.betas[s](j));
      os << "\n";
    }
    write_output(path_csv, os.str());
  }
  return 0;
}

int cmd_mdc(const std::string& map_path, double rho,
            const std::vector<double>& sweep, const std::string& out_path) {
  const outid::SignatureMap map = map_from_csv(map_path);
  if (!sweep.empty()) {
    const auto rows = outid::diagnosability_sweep(map, sweep);
    std::ostringstream os;
    os << "rho,diagnosability\n";
    for (const auto& [r, v] : rows)
      os << format_number(r) << "," << format_number(v) << "\n";
    write_output(out_path, os.str());
    return 0;
  }
  const outid::MdcCatalog cat = outid::build_mdc(map, rho);
  std::ostringstream os;
  os << "diagnosability," << format_number(cat.diagnosability) << "\n";
  for (size_t i = 0; i < cat.clusters.size(); ++i) {
    os << "cluster_" << (i + 1);
    for (int l : cat.clusters[i]) os << "," << l;
    os << "\n";
  }
  write_output(out_path, os.str());
  for (int l : cat.unobservable_lines)
    std::cerr << "warning: line " << l
              << " has a zero-variance signature (unobservable)\n";
  return 0;
}

int cmd_bench(const std::string& case_path, const outid::BenchmarkConfig& config,
              bool per_run, const std::string& out_path) {
  const outid::NetworkModel model = load_model(case_path);
  const outid::BenchmarkReport report = outid::run_benchmark(model, config);
  write_output(out_path, outid::report_to_json(report, per_run).dump(2) + "\n");
  std::cerr << "scored " << (report.total_scenarios - report.infeasible_scenarios)
            << " of " << report.total_scenarios << " scenarios ("
            << report.infeasible_scenarios << " infeasible)\n";
  return 0;
}

int cmd_sweep_noise(const std::string& case_path,
                    const outid::BenchmarkConfig& config,
                    const std::vector<double>& fractions,
                    const std::string& out_path) {
  const outid::NetworkModel model = load_model(case_path);
  const auto rows = outid::sweep_noise(model, config, fractions);
  std::ostringstream os;
  os << "sigma_fraction,coverage,kind,mdc_augmented,median_accuracy\n";
  for (const auto& r : rows)
    os << format_number(r.sigma_fraction) << "," << format_number(r.coverage)
       << "," << outid::to_string(r.kind) << "," << (r.mdc_augmented ? 1 : 0)
       << "," << format_number(r.median) << "\n";
  write_output(out_path, os.str());
  return 0;
}

int cmd_sweep_rho(const std::string& case_path,
                  const std::vector<double>& thresholds, double coverage,
                  int placements, std::uint64_t seed,
                  const std::string& out_path) {
  const outid::NetworkModel model = load_model(case_path);
  const auto rows = outid::sweep_rho(model, thresholds, coverage, placements, seed);
  std::ostringstream os;
  os << "rho,v_mean,v_std\n";
  for (const auto& r : rows)
    os << format_number(r.rho) << "," << format_number(r.v_mean) << ","
       << format_number(r.v_std) << "\n";
  write_output(out_path, os.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"transmission-line outage identification from PMU angle data"};
  app.require_subcommand(1);

  // solve --------------------------------------------------------------
  std::string solve_case;
  bool solve_json = false;
  double solve_tol = 1e-8;
  int solve_max_iter = 20;
  auto* solve = app.add_subcommand("solve", "run the AC power flow");
  solve->add_option("--case", solve_case, "case file")->required();
  solve->add_flag("--json", solve_json, "structured JSON output");
  solve->add_option("--tol", solve_tol, "mismatch tolerance")
      ->check(CLI::PositiveNumber);
  solve->add_option("--max-iter", solve_max_iter, "iteration cap")
      ->check(CLI::PositiveNumber);

  // map ----------------------------------------------------------------
  std::string map_case, map_out;
  std::vector<int> map_pmus;
  double map_coverage = 0.5;
  std::uint64_t map_seed = 42;
  bool map_dc = false;
  auto* mapc = app.add_subcommand("map", "emit the outage signature map as CSV");
  mapc->add_option("--case", map_case, "case file")->required();
  mapc->add_option("--pmus", map_pmus, "explicit PMU bus ids")->delimiter(',');
  mapc->add_option("--coverage", map_coverage,
                   "PMU coverage fraction (used when --pmus is absent)")
      ->check(CLI::Range(1e-9, 1.0));
  mapc->add_option("--seed", map_seed, "placement seed");
  mapc->add_flag("--dc", map_dc, "use the DC susceptance matrix instead of J");
  mapc->add_option("--out", map_out, "output path (default stdout)");

  // identify -----------------------------------------------------------
  std::string id_map, id_dtheta, id_path_csv;
  double id_gamma = 0.3;
  int id_top_k = 0, id_max_steps = 0;
  auto* identify =
      app.add_subcommand("identify", "run the sparse path on a measurement");
  identify->add_option("--map", id_map, "signature map CSV")->required();
  identify->add_option("--dtheta", id_dtheta, "angle-change CSV (one column)")
      ->required();
  identify->add_option("--gamma", id_gamma, "relative selection threshold")
      ->check(CLI::Range(1e-9, 1.0));
  identify->add_option("--top-k", id_top_k, "keep the k largest coefficients")
      ->check(CLI::PositiveNumber);
  identify->add_option("--max-steps", id_max_steps, "path step cap Q")
      ->check(CLI::PositiveNumber);
  identify->add_option("--path-csv", id_path_csv, "dump the full path here");

  // mdc ----------------------------------------------------------------
  std::string mdc_map, mdc_out;
  double mdc_rho = 0.95;
  std::vector<double> mdc_sweep;
  auto* mdcc = app.add_subcommand("mdc", "minimal diagnosable clusters");
  mdcc->add_option("--map", mdc_map, "signature map CSV")->required();
  mdcc->add_option("--rho", mdc_rho, "correlation threshold")
      ->check(CLI::Range(1e-9, 1.0));
  mdcc->add_option("--sweep", mdc_sweep, "thresholds for a diagnosability sweep")
      ->delimiter(',');
  mdcc->add_option("--out", mdc_out, "output path (default stdout)");

  // bench / sweep-noise shared config ----------------------------------
  auto add_bench_options = [](CLI::App* cmd, std::string& case_path,
                              outid::BenchmarkConfig& cfg,
                              std::vector<std::string>& kinds,
                              std::string& out_path) {
    cmd->add_option("--case", case_path, "case file")->required();
    cmd->add_option("--coverage", cfg.coverages, "coverage fractions")
        ->delimiter(',');
    cmd->add_option("--pmu-count", cfg.pmu_count_override,
                    "fixed PMU count overriding --coverage")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--runs", cfg.runs, "Monte-Carlo runs")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--kind", kinds, "outage kinds: single,double")
        ->delimiter(',');
    cmd->add_option("--double-count", cfg.double_count,
                    "random pairs per double-outage run")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--rho", cfg.rho_star, "cluster threshold")
        ->check(CLI::Range(1e-9, 1.0));
    cmd->add_option("--gamma", cfg.gamma, "lasso selection threshold")
        ->check(CLI::Range(1e-9, 1.0));
    cmd->add_option("--noise", cfg.noise.sigma_fraction,
                    "noise std as a fraction of the clean angle change")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--seed", cfg.seed, "master seed");
    cmd->add_option("--out", out_path, "output path (default stdout)");
  };

  std::string bench_case, bench_out;
  outid::BenchmarkConfig bench_cfg;
  std::vector<std::string> bench_kinds{"single", "double"};
  bool bench_per_run = false;
  auto* bench = app.add_subcommand("bench", "Monte-Carlo accuracy benchmark");
  add_bench_options(bench, bench_case, bench_cfg, bench_kinds, bench_out);
  bench->add_flag("--per-run", bench_per_run,
                  "include per-run accuracies in the report");

  std::string sn_case, sn_out;
  outid::BenchmarkConfig sn_cfg;
  std::vector<std::string> sn_kinds{"single", "double"};
  std::vector<double> sn_fractions{0.0, 0.02, 0.05, 0.08, 0.10};
  auto* sweep_noise =
      app.add_subcommand("sweep-noise", "benchmark medians vs noise level");
  add_bench_options(sweep_noise, sn_case, sn_cfg, sn_kinds, sn_out);
  sweep_noise->add_option("--fractions", sn_fractions, "noise fractions to sweep")
      ->delimiter(',');

  // sweep-rho ----------------------------------------------------------
  std::string sr_case, sr_out;
  std::vector<double> sr_thresholds{0.80, 0.84, 0.88, 0.93, 0.95, 0.98, 0.99};
  double sr_coverage = 0.5;
  int sr_placements = 30;
  std::uint64_t sr_seed = 7;
  auto* sweep_rho =
      app.add_subcommand("sweep-rho", "diagnosability vs cluster threshold");
  sweep_rho->add_option("--case", sr_case, "case file")->required();
  sweep_rho->add_option("--rho-list", sr_thresholds, "thresholds")->delimiter(',');
  sweep_rho->add_option("--coverage", sr_coverage, "coverage fraction")
      ->check(CLI::Range(1e-9, 1.0));
  sweep_rho->add_option("--placements", sr_placements, "placements to average")
      ->check(CLI::Range(2, 1000000));
  sweep_rho->add_option("--seed", sr_seed, "placement seed");
  sweep_rho->add_option("--out", sr_out, "output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (solve->parsed())
      return cmd_solve(solve_case, solve_json, solve_tol, solve_max_iter);
    if (mapc->parsed())
      return cmd_map(map_case, map_pmus, map_coverage, map_seed, map_dc, map_out);
    if (identify->parsed())
      return cmd_identify(id_map, id_dtheta, id_gamma, id_top_k, id_max_steps,
                          id_path_csv);
    if (mdcc->parsed()) return cmd_mdc(mdc_map, mdc_rho, mdc_sweep, mdc_out);
    if (bench->parsed()) {
      bench_cfg.kinds = parse_kinds(bench_kinds);
      return cmd_bench(bench_case, bench_cfg, bench_per_run, bench_out);
    }
    if (sweep_noise->parsed()) {
      sn_cfg.kinds = parse_kinds(sn_kinds);
      return cmd_sweep_noise(sn_case, sn_cfg, sn_fractions, sn_out);
    }
    if (sweep_rho->parsed())
      return cmd_sweep_rho(sr_case, sr_thresholds, sr_coverage, sr_placements,
                           sr_seed, sr_out);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;  // unreachable with require_subcommand(1)
}
