#ifndef OUTID_MDC_HPP
#define OUTID_MDC_HPP

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "outid/lasso.hpp"
#include "outid/signature.hpp"

namespace outid {

/// Minimal diagnosable clusters: line j joins g_i when the outage signatures
/// of i and j are confusable, |corr(F_i, F_j)| >= rho*. Every cluster contains
/// its own line.
struct MdcCatalog {
  std::vector<std::vector<int>> clusters;  // clusters[i-1] = g_i, sorted line ids
  double rho_star = 0.0;
  double diagnosability = 0.0;  // fraction of singleton clusters
  Eigen::MatrixXd correlation;  // L x L, |corr| not applied
  std::vector<int> unobservable_lines;  // zero-variance signature columns
};

inline MdcCatalog build_mdc(const SignatureMap& map, double rho_star) {
  if (rho_star <= 0.0 || rho_star > 1.0)
    throw std::invalid_argument("rho* must be in (0, 1]");
  const Eigen::Index k = map.f.rows(), l = map.f.cols();
  if (k < 2) throw std::invalid_argument("need at least 2 PMU rows");

  MdcCatalog cat;
  cat.rho_star = rho_star;
  Eigen::MatrixXd centered = map.f;
  Eigen::VectorXd norms(l);
  for (Eigen::Index j = 0; j < l; ++j) {
    centered.col(j).array() -= map.f.col(j).mean();
    norms(j) = centered.col(j).norm();
    if (norms(j) <= 1e-14)
      cat.unobservable_lines.push_back(static_cast<int>(j) + 1);
  }
  cat.correlation.setZero(l, l);
  for (Eigen::Index i = 0; i < l; ++i) {
    cat.correlation(i, i) = norms(i) > 1e-14 ? 1.0 : 0.0;
    for (Eigen::Index j = i + 1; j < l; ++j) {
      if (norms(i) <= 1e-14 || norms(j) <= 1e-14) continue;  // treated as 0
      const double c = centered.col(i).dot(centered.col(j)) / (norms(i) * norms(j));
      cat.correlation(i, j) = c;
      cat.correlation(j, i) = c;
    }
  }
  cat.clusters.resize(static_cast<size_t>(l));
  int singletons = 0;
  for (Eigen::Index i = 0; i < l; ++i) {
    auto& g = cat.clusters[static_cast<size_t>(i)];
    g.push_back(static_cast<int>(i) + 1);
    for (Eigen::Index j = 0; j < l; ++j) {
      if (j == i) continue;
      if (std::abs(cat.correlation(i, j)) >= rho_star)
        g.push_back(static_cast<int>(j) + 1);
    }
    std::sort(g.begin(), g.end());
    if (g.size() == 1) ++singletons;
  }
  cat.diagnosability = static_cast<double>(singletons) / static_cast<double>(l);
  return cat;
}

/// (rho*, V(rho*)) pairs; V is non-decreasing in rho*.
inline std::vector<std::pair<double, double>> diagnosability_sweep(
    const SignatureMap& map, const std::vector<double>& thresholds) {
  std::vector<std::pair<double, double>> out;
  for (double rho : thresholds)
    out.emplace_back(rho, build_mdc(map, rho).diagnosability);
  return out;
}

/// Union of the clusters of all selected lines, deduplicated and sorted.
inline std::vector<int> augment(const std::vector<int>& selected_lines,
                                const MdcCatalog& catalog) {
  std::set<int> out;
  for (int line : selected_lines) {
    if (line < 1 || line > static_cast<int>(catalog.clusters.size()))
      throw std::out_of_range("line id out of range: " + std::to_string(line));
    const auto& g = catalog.clusters[static_cast<size_t>(line - 1)];
    out.insert(g.begin(), g.end());
  }
  return {out.begin(), out.end()};
}

inline std::vector<int> augment(const IdentificationResult& result,
                                const MdcCatalog& catalog) {
  return augment(result.selected_lines, catalog);
}

}  // namespace outid

#endif  // OUTID_MDC_HPP
