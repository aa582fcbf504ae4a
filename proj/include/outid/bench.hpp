#ifndef OUTID_BENCH_HPP
#define OUTID_BENCH_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "outid/lasso.hpp"
#include "outid/mdc.hpp"
#include "outid/network.hpp"
#include "outid/powerflow.hpp"
#include "outid/rng.hpp"
#include "outid/signature.hpp"

namespace outid {

struct NoiseModel {
  double sigma_fraction = 0.05;  // of the clean per-bus angle change
  double floor = 1e-6;           // rad, keeps unaffected buses noisy too
};

enum class OutageKind { Single, Double };
enum class Method { Lasso, Corr, Dc };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::Lasso: return "lasso";
    case Method::Corr: return "corr";
    default: return "dc";
  }
}
inline std::string to_string(OutageKind k) {
  return k == OutageKind::Single ? "single" : "double";
}

struct OutageScenario {
  std::vector<int> lines;          // tripped line ids
  Eigen::VectorXd load_factors;    // per bus, multiplies P and Q demand
  std::uint64_t noise_seed = 0;
};

/// K = round(coverage * N) buses drawn uniformly without replacement.
inline PmuPlacement sample_placement(const NetworkModel& model,
                                     double coverage, Rng& rng) {
  if (coverage <= 0.0 || coverage > 1.0)
    throw std::invalid_argument("coverage must be in (0, 1]");
  const int n = model.bus_count();
  const int k = static_cast<int>(std::lround(coverage * n));
  if (k == 0) throw std::invalid_argument("coverage rounds to zero PMUs");
  return PmuPlacement{rng.sample_without_replacement(n, k)};
}

inline PmuPlacement sample_placement_count(const NetworkModel& model, int k,
                                           Rng& rng) {
  if (k < 1 || k > model.bus_count())
    throw std::invalid_argument("PMU count out of range");
  return PmuPlacement{rng.sample_without_replacement(model.bus_count(), k)};
}

inline bool keeps_single_island(const NetworkModel& model,
                                const std::vector<int>& lines) {
  return count_islands(remove_lines(model, {lines.begin(), lines.end()}))
             .count == 1;
}

inline Eigen::VectorXd draw_load_factors(const NetworkModel& model, Rng& rng) {
  Eigen::VectorXd f(model.bus_count());
  for (int i = 0; i < model.bus_count(); ++i) f(i) = rng.uniform(0.95, 1.05);
  return f;
}

/// Single: the fixed candidate list 1..36 minus line 21, kept only when the
/// removal does not island the system. Double: rejection-sampled distinct
/// pairs over all lines.
inline std::vector<OutageScenario> generate_scenarios(
    const NetworkModel& model, OutageKind kind, int count, Rng& rng) {
  std::vector<OutageScenario> out;
  if (kind == OutageKind::Single) {
    const int hi = std::min(36, model.line_count());
    for (int l = 1; l <= hi; ++l) {
      if (l == 21) continue;
      if (!keeps_single_island(model, {l})) continue;
      OutageScenario s;
      s.lines = {l};
      s.load_factors = draw_load_factors(model, rng);
      s.noise_seed = rng.next_u64();
      out.push_back(std::move(s));
    }
    return out;
  }
  std::set<std::pair<int, int>> seen;
  const int cap = 200 * count + 1000;
  int attempts = 0;
  while (static_cast<int>(out.size()) < count) {
    if (++attempts > cap)
      throw std::runtime_error("could not sample enough island-free pairs");
    int a = 1 + rng.uniform_int(model.line_count());
    int b = 1 + rng.uniform_int(model.line_count());
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    if (!seen.insert({a, b}).second) continue;
    if (!keeps_single_island(model, {a, b})) continue;
    OutageScenario s;
    s.lines = {a, b};
    s.load_factors = draw_load_factors(model, rng);
    s.noise_seed = rng.next_u64();
    out.push_back(std::move(s));
  }
  return out;
}

inline NetworkModel perturb_loads(const NetworkModel& model,
                                  const Eigen::VectorXd& factors) {
  NetworkModel out = model;
  for (auto& b : out.buses) {
    b.p_load *= factors(b.id - 1);
    b.q_load *= factors(b.id - 1);
  }
  return out;
}

struct Measurement {
  Eigen::VectorXd dtheta_clean;  // all N buses
  Eigen::VectorXd dtheta_noisy;  // all N buses
  bool feasible = false;
};

/// Pre-outage flow under perturbed loads, post-outage flow with the lines
/// removed, Gaussian noise per bus with std max(fraction * |dtheta_i|, floor).
/// Computed over all buses; a placement just selects rows afterwards, so the
/// draw is independent of PMU coverage.
inline Measurement simulate_full_measurement(const NetworkModel& model,
                                             const OutageScenario& scenario,
                                             const NoiseModel& noise,
                                             const PowerFlowOptions& pf = {}) {
  Measurement m;
  const NetworkModel pre_model = perturb_loads(model, scenario.load_factors);
  const SteadyState pre = solve_power_flow(pre_model, pf);
  if (!pre.converged) return m;
  const NetworkModel post_model = remove_lines(
      pre_model, {scenario.lines.begin(), scenario.lines.end()});
  const SteadyState post = solve_power_flow(post_model, pf);
  if (!post.converged) return m;
  m.dtheta_clean = post.theta - pre.theta;
  m.dtheta_noisy = m.dtheta_clean;
  Rng rng(scenario.noise_seed);
  for (Eigen::Index i = 0; i < m.dtheta_clean.size(); ++i) {
    const double sigma = std::max(
        noise.sigma_fraction * std::abs(m.dtheta_clean(i)), noise.floor);
    m.dtheta_noisy(i) += sigma * rng.normal();
  }
  m.feasible = true;
  return m;
}

inline Eigen::VectorXd select_pmu_rows(const Eigen::VectorXd& full,
                                       const PmuPlacement& placement) {
  Eigen::VectorXd out(placement.size());
  for (int i = 0; i < placement.size(); ++i)
    out(i) = full(placement.buses[static_cast<size_t>(i)] - 1);
  return out;
}

/// Observed noisy angle change at the PMU buses for one scenario.
inline Eigen::VectorXd simulate_measurement(const NetworkModel& model,
                                            const OutageScenario& scenario,
                                            const PmuPlacement& placement,
                                            const NoiseModel& noise,
                                            const PowerFlowOptions& pf = {}) {
  const Measurement m = simulate_full_measurement(model, scenario, noise, pf);
  if (!m.feasible)
    throw std::runtime_error("scenario power flow did not converge");
  return select_pmu_rows(m.dtheta_noisy, placement);
}

/// Correlation baseline: rank lines by |corr(F_l, dtheta)|, keep the top k.
/// Ties resolve to the lower line id.
inline IdentificationResult correlation_method(const SignatureMap& map,
                                               const Eigen::VectorXd& dtheta,
                                               int top_k) {
  const Eigen::Index l = map.f.cols();
  const Eigen::VectorXd yc = dtheta.array() - dtheta.mean();
  const double yn = yc.norm();
  std::vector<std::pair<double, int>> ranked;  // (-|corr|, line)
  for (Eigen::Index j = 0; j < l; ++j) {
    const Eigen::VectorXd xc = map.f.col(j).array() - map.f.col(j).mean();
    const double xn = xc.norm();
    const double c = (xn <= 1e-14 || yn <= 1e-14) ? 0.0 : xc.dot(yc) / (xn * yn);
    ranked.emplace_back(-std::abs(c), static_cast<int>(j) + 1);
  }
  std::sort(ranked.begin(), ranked.end());
  IdentificationResult res;
  res.selection_rule.kind = SelectionRule::Kind::TopK;
  res.selection_rule.k = top_k;
  for (int i = 0; i < top_k && i < static_cast<int>(ranked.size()); ++i) {
    res.selected_lines.push_back(ranked[static_cast<size_t>(i)].second);
    res.coefficients.push_back(-ranked[static_cast<size_t>(i)].first);
  }
  return res;
}

struct MethodInputs {
  const SignatureMap* ac_map = nullptr;
  const SignatureMap* dc_map = nullptr;
  SelectionRule lasso_rule;
  int max_steps = 0;      // 0 = default Q = min{K-1, L}
  int known_outage_size = 1;  // used by the correlation baseline only
};

inline IdentificationResult run_method(Method method, const MethodInputs& in,
                                       const Eigen::VectorXd& dtheta) {
  switch (method) {
    case Method::Corr:
      return correlation_method(*in.ac_map, dtheta, in.known_outage_size);
    case Method::Lasso:
    case Method::Dc: {
      const SignatureMap& map =
          method == Method::Lasso ? *in.ac_map : *in.dc_map;
      const StandardizedDesign design = standardize(map);
      const int q = in.max_steps > 0
                        ? in.max_steps
                        : default_path_steps(static_cast<int>(map.f.rows()),
                                             static_cast<int>(map.f.cols()));
      const LassoPath path = lars_path(design, dtheta, q);
      return select_outages(path, in.lasso_rule);
    }
  }
  throw std::logic_error("unreachable");
}

/// Exact-intersection accuracy: fraction of scenarios whose identified set meets
/// the true set in exactly `a` lines.
inline double score(const std::vector<std::pair<std::vector<int>, std::vector<int>>>&
                        identified_and_true,
                    int a) {
  if (identified_and_true.empty())
    throw std::invalid_argument("no scenarios to score");
  int hits = 0;
  for (const auto& [sel, truth] : identified_and_true) {
    std::set<int> s(sel.begin(), sel.end());
    int inter = 0;
    for (int t : truth) inter += s.count(t) ? 1 : 0;
    if (inter == a) ++hits;
  }
  return static_cast<double>(hits) /
         static_cast<double>(identified_and_true.size());
}

struct BenchmarkConfig {
  std::vector<double> coverages{0.25, 0.5};
  int pmu_count_override = 0;  // > 0: fixed K for every coverage entry
  std::vector<OutageKind> kinds{OutageKind::Single, OutageKind::Double};
  int runs = 200;
  int double_count = 100;
  double rho_star = 0.95;
  // relative selection threshold applied to transfer-normalized coefficients;
  // looser than the plain-coefficient default because normalized magnitudes
  // of jointly tripped lines spread wider than raw ones
  double gamma = 0.12;
  int max_steps = 0;
  NoiseModel noise;
  PowerFlowOptions pf;
  std::uint64_t seed = 42;

  void validate() const {
    if (runs < 1) throw std::invalid_argument("runs must be >= 1");
    if (coverages.empty()) throw std::invalid_argument("no coverages given");
    for (double c : coverages)
      if (c <= 0.0 || c > 1.0)
        throw std::invalid_argument("coverage must be in (0, 1]");
    if (kinds.empty()) throw std::invalid_argument("no outage kinds given");
    if (double_count < 1) throw std::invalid_argument("double_count >= 1");
    if (rho_star <= 0.0 || rho_star > 1.0)
      throw std::invalid_argument("rho* must be in (0, 1]");
    if (gamma <= 0.0 || gamma > 1.0)
      throw std::invalid_argument("gamma must be in (0, 1]");
    if (noise.sigma_fraction < 0.0)
      throw std::invalid_argument("noise fraction must be >= 0");
  }
};

struct Quartiles {
  double q1 = 0.0, median = 0.0, q3 = 0.0;
};

inline double quantile(std::vector<double> v, double p) {
  if (v.empty()) throw std::invalid_argument("quantile of empty set");
  std::sort(v.begin(), v.end());
  const double h = p * (static_cast<double>(v.size()) - 1.0);
  const size_t lo = static_cast<size_t>(std::floor(h));
  const size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline Quartiles quartiles(const std::vector<double>& v) {
  return {quantile(v, 0.25), quantile(v, 0.5), quantile(v, 0.75)};
}

/// One accuracy distribution over runs. `match` is the intersection target:
/// for doubles, all-correct is exact 2 and half-correct is at-least 1.
struct AccuracyCell {
  double coverage = 0.0;
  OutageKind kind = OutageKind::Single;
  Method method = Method::Lasso;
  bool mdc_augmented = false;
  std::string match;  // "exact1", "exact2", "atleast1"
  std::vector<double> per_run;
  Quartiles stats;
};

struct BenchmarkReport {
  BenchmarkConfig config;
  std::vector<AccuracyCell> cells;
  int infeasible_scenarios = 0;
  int total_scenarios = 0;

  const AccuracyCell& cell(double coverage, OutageKind kind, Method method,
                           bool mdc, const std::string& match) const {
    for (const auto& c : cells)
      if (c.coverage == coverage && c.kind == kind && c.method == method &&
          c.mdc_augmented == mdc && c.match == match)
        return c;
    throw std::out_of_range("no such report cell");
  }
};

namespace detail {

struct ScenarioOutcome {
  std::vector<int> truth;
  // per method: raw and augmented selections
  std::vector<int> raw[3];
  std::vector<int> aug[3];
};

inline int intersect_count(const std::vector<int>& sel,
                           const std::vector<int>& truth) {
  std::set<int> s(sel.begin(), sel.end());
  int n = 0;
  for (int t : truth) n += s.count(t) ? 1 : 0;
  return n;
}

}  // namespace detail

/// Full Monte-Carlo protocol. One PMU placement per run; the signature maps
/// and MDC catalog are built offline from the unperturbed base-case state and
/// reused for every scenario of the run. Scenario randomness derives from
/// (seed, kind, run, scenario), so the report is a pure function of config.
inline BenchmarkReport run_benchmark(const NetworkModel& model,
                                     const BenchmarkConfig& config) {
  config.validate();
  if (count_islands(model).count != 1)
    throw std::invalid_argument("base model must be a single island");

  BenchmarkReport report;
  report.config = config;

  const SteadyState base = solve_power_flow(model, config.pf);
  if (!base.converged)
    throw std::runtime_error("base-case power flow did not converge");

  // Full-observability maps; per-placement maps are row selections of these.
  std::vector<int> all_buses(static_cast<size_t>(model.bus_count()));
  for (int i = 0; i < model.bus_count(); ++i)
    all_buses[static_cast<size_t>(i)] = i + 1;
  const PmuPlacement everything{all_buses};
  const SignatureMap ac_full = build_signature_map(model, base, everything);
  const SignatureMap dc_full = dc_signature_map(model, everything);
  const Eigen::VectorXd transfers = line_transfer_estimates(model, base);

  auto restrict_map = [&](const SignatureMap& full,
                          const PmuPlacement& placement) {
    SignatureMap m;
    m.placement = placement;
    m.line_ids = full.line_ids;
    m.reference_bus = full.reference_bus;
    m.f.resize(placement.size(), full.f.cols());
    for (int i = 0; i < placement.size(); ++i)
      m.f.row(i) = full.f.row(placement.buses[static_cast<size_t>(i)] - 1);
    return m;
  };

  const std::array<Method, 3> methods{Method::Lasso, Method::Corr, Method::Dc};

  // accumulators: key = (coverage idx, kind idx, method, mdc, match)
  std::map<std::string, AccuracyCell> acc;
  auto touch = [&](double cov, OutageKind kind, Method meth, bool mdc,
                   const std::string& match) -> AccuracyCell& {
    const std::string key = std::to_string(cov) + "|" + to_string(kind) + "|" +
                            to_string(meth) + "|" + (mdc ? "m" : "r") + "|" +
                            match;
    auto& c = acc[key];
    c.coverage = cov;
    c.kind = kind;
    c.method = meth;
    c.mdc_augmented = mdc;
    c.match = match;
    return c;
  };

  Rng master(config.seed);
  for (int run = 0; run < config.runs; ++run) {
    Rng run_rng = master.child(static_cast<std::uint64_t>(run) + 1);

    for (size_t ki = 0; ki < config.kinds.size(); ++ki) {
      const OutageKind kind = config.kinds[ki];
      Rng scen_rng = run_rng.child(10 + ki);
      const auto scenarios = generate_scenarios(
          model, kind, kind == OutageKind::Single ? 0 : config.double_count,
          scen_rng);

      // power flows once per scenario, shared across coverages
      std::vector<Measurement> measurements;
      std::vector<const OutageScenario*> feasible;
      for (const auto& s : scenarios) {
        Measurement m =
            simulate_full_measurement(model, s, config.noise, config.pf);
        ++report.total_scenarios;
        if (!m.feasible) {
          ++report.infeasible_scenarios;
          continue;
        }
        measurements.push_back(std::move(m));
        feasible.push_back(&s);
      }
      if (feasible.empty()) continue;

      for (size_t ci = 0; ci < config.coverages.size(); ++ci) {
        const double cov = config.coverages[ci];
        Rng place_rng = run_rng.child(100 + ci);
        const PmuPlacement placement =
            config.pmu_count_override > 0
                ? sample_placement_count(model, config.pmu_count_override,
                                         place_rng)
                : sample_placement(model, cov, place_rng);

        const SignatureMap ac_map = restrict_map(ac_full, placement);
        const SignatureMap dc_map = restrict_map(dc_full, placement);
        const MdcCatalog catalog = build_mdc(ac_map, config.rho_star);

        MethodInputs inputs;
        inputs.ac_map = &ac_map;
        inputs.dc_map = &dc_map;
        inputs.lasso_rule.gamma = config.gamma;
        inputs.lasso_rule.weights = transfers;
        inputs.max_steps = config.max_steps;
        inputs.known_outage_size = kind == OutageKind::Single ? 1 : 2;

        std::vector<detail::ScenarioOutcome> outcomes;
        for (size_t si = 0; si < feasible.size(); ++si) {
          const Eigen::VectorXd obs =
              select_pmu_rows(measurements[si].dtheta_noisy, placement);
          detail::ScenarioOutcome oc;
          oc.truth = feasible[si]->lines;
          for (size_t mi = 0; mi < methods.size(); ++mi) {
            const IdentificationResult res =
                run_method(methods[mi], inputs, obs);
            oc.raw[mi] = res.selected_lines;
            oc.aug[mi] = augment(res.selected_lines, catalog);
          }
          outcomes.push_back(std::move(oc));
        }

        auto push = [&](Method meth, size_t mi, bool mdc,
                        const std::string& match, int a, bool at_least) {
          int hits = 0;
          for (const auto& oc : outcomes) {
            const int inter =
                detail::intersect_count(mdc ? oc.aug[mi] : oc.raw[mi], oc.truth);
            if (at_least ? inter >= a : inter == a) ++hits;
          }
          touch(cov, kind, meth, mdc, match)
              .per_run.push_back(static_cast<double>(hits) /
                                 static_cast<double>(outcomes.size()));
        };
        for (size_t mi = 0; mi < methods.size(); ++mi) {
          for (bool mdc : {false, true}) {
            if (kind == OutageKind::Single) {
              push(methods[mi], mi, mdc, "exact1", 1, false);
            } else {
              push(methods[mi], mi, mdc, "exact2", 2, false);
              push(methods[mi], mi, mdc, "atleast1", 1, true);
            }
          }
        }
      }
    }
  }

  for (auto& [key, cell] : acc) {
    cell.stats = quartiles(cell.per_run);
    report.cells.push_back(std::move(cell));
  }
  return report;
}

/// Median lasso accuracy as a function of the noise level: the full
/// benchmark re-run per noise fraction, reporting the
/// raw and MDC-augmented medians for every coverage and outage kind.
struct NoiseSweepRow {
  double sigma_fraction = 0.0;
  double coverage = 0.0;
  OutageKind kind = OutageKind::Single;
  bool mdc_augmented = false;
  double median = 0.0;
};

inline std::vector<NoiseSweepRow> sweep_noise(
    const NetworkModel& model, BenchmarkConfig config,
    const std::vector<double>& fractions) {
  if (fractions.empty()) throw std::invalid_argument("no noise fractions");
  std::vector<NoiseSweepRow> rows;
  for (double frac : fractions) {
    config.noise.sigma_fraction = frac;
    const BenchmarkReport rep = run_benchmark(model, config);
    for (double cov : config.coverages) {
      for (OutageKind kind : config.kinds) {
        const std::string match =
            kind == OutageKind::Single ? "exact1" : "exact2";
        for (bool mdc : {false, true}) {
          NoiseSweepRow row;
          row.sigma_fraction = frac;
          row.coverage = cov;
          row.kind = kind;
          row.mdc_augmented = mdc;
          row.median =
              rep.cell(cov, kind, Method::Lasso, mdc, match).stats.median;
          rows.push_back(row);
        }
      }
    }
  }
  return rows;
}

/// Mean and sample std of V(rho*) over freshly drawn placements.
/// Uses the base-case AC map.
struct RhoSweepRow {
  double rho = 0.0;
  double v_mean = 0.0;
  double v_std = 0.0;
};

inline std::vector<RhoSweepRow> sweep_rho(const NetworkModel& model,
                                          const std::vector<double>& thresholds,
                                          double coverage, int placements,
                                          std::uint64_t seed,
                                          const PowerFlowOptions& pf = {}) {
  if (placements < 2) throw std::invalid_argument("need >= 2 placements");
  const SteadyState base = solve_power_flow(model, pf);
  if (!base.converged)
    throw std::runtime_error("base-case power flow did not converge");
  Rng master(seed);
  std::vector<std::vector<double>> vs(thresholds.size());
  for (int i = 0; i < placements; ++i) {
    Rng r = master.child(static_cast<std::uint64_t>(i) + 1);
    const PmuPlacement placement = sample_placement(model, coverage, r);
    const SignatureMap map = build_signature_map(model, base, placement);
    for (size_t t = 0; t < thresholds.size(); ++t)
      vs[t].push_back(build_mdc(map, thresholds[t]).diagnosability);
  }
  std::vector<RhoSweepRow> rows;
  for (size_t t = 0; t < thresholds.size(); ++t) {
    RhoSweepRow row;
    row.rho = thresholds[t];
    double sum = 0.0;
    for (double v : vs[t]) sum += v;
    row.v_mean = sum / static_cast<double>(vs[t].size());
    double ss = 0.0;
    for (double v : vs[t]) ss += (v - row.v_mean) * (v - row.v_mean);
    row.v_std = std::sqrt(ss / (static_cast<double>(vs[t].size()) - 1.0));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace outid

#endif  // OUTID_BENCH_HPP
