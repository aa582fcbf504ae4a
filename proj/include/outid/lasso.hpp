#ifndef OUTID_LASSO_HPP
#define OUTID_LASSO_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "outid/signature.hpp"

namespace outid {

/// Design matrix with mean-centered, unit-norm columns. Zero-norm columns can
/// never be selected and are excluded from the path.
struct StandardizedDesign {
  Eigen::MatrixXd columns;        // K x P, retained columns only
  Eigen::VectorXd centers;        // length L, original column means
  Eigen::VectorXd scales;         // length L, original column norms (0 if dropped)
  std::vector<int> retained_ids;  // line id per retained column
  std::vector<int> retained_pos;  // original column position per retained column
  std::vector<int> dropped_columns;
  int total_columns = 0;
};

struct LassoPath {
  std::vector<double> lambdas;            // strictly decreasing, lambda_0 first
  std::vector<Eigen::VectorXd> betas;     // length-L, original column scaling
  std::vector<std::vector<int>> active_sets;  // line ids, entry order
  int max_steps = 0;
  bool degenerate = false;  // an exactly collinear active set was hit
};

struct SelectionRule {
  enum class Kind { RelativeThreshold, TopK } kind = Kind::RelativeThreshold;
  double gamma = 0.3;  // keep |beta_j| >= gamma * max|beta|
  int k = 0;
  // optional per-line magnitude normalizers (e.g. equivalent power transfers);
  // when set, ranking and thresholding use |beta_j| / weights_j so lines with
  // very different flows compete on an even footing
  Eigen::VectorXd weights;
};

struct IdentificationResult {
  std::vector<int> selected_lines;  // descending |beta|
  std::vector<double> coefficients;
  LassoPath path;
  SelectionRule selection_rule;
};

inline StandardizedDesign standardize(const Eigen::MatrixXd& f,
                                      const std::vector<int>& line_ids) {
  const Eigen::Index k = f.rows(), l = f.cols();
  if (k < 2) throw std::invalid_argument("standardize needs at least 2 rows");
  StandardizedDesign d;
  d.total_columns = static_cast<int>(l);
  d.centers.resize(l);
  d.scales.setZero(l);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = 0; j < l; ++j) {
    d.centers(j) = f.col(j).mean();
    const double norm = (f.col(j).array() - d.centers(j)).matrix().norm();
    if (norm <= 1e-12 * std::max(1.0, f.col(j).norm())) {
      d.dropped_columns.push_back(line_ids[static_cast<size_t>(j)]);
    } else {
      d.scales(j) = norm;
      keep.push_back(j);
    }
  }
  if (keep.empty())
    throw std::invalid_argument("all design columns are zero after centering");
  d.columns.resize(k, static_cast<Eigen::Index>(keep.size()));
  for (size_t c = 0; c < keep.size(); ++c) {
    const Eigen::Index j = keep[c];
    d.columns.col(static_cast<Eigen::Index>(c)) =
        (f.col(j).array() - d.centers(j)) / d.scales(j);
    d.retained_ids.push_back(line_ids[static_cast<size_t>(j)]);
    d.retained_pos.push_back(static_cast<int>(j));
  }
  return d;
}

inline StandardizedDesign standardize(const SignatureMap& map) {
  return standardize(map.f, map.line_ids);
}

inline int default_path_steps(int k, int l) { return std::min(k - 1, l); }

/// Least angle regression with the lasso modification. Transition points carry
/// the exact lasso solution of  (1/2)||y - X b||^2 + lambda ||b||_1  on the
/// standardized design, so lambda equals the equicorrelation level max|X^T r|.
/// Coefficients are reported in the original (unstandardized) column scale.
inline LassoPath lars_path(const StandardizedDesign& design,
                           const Eigen::VectorXd& dtheta, int max_steps) {
  const Eigen::Index k = design.columns.rows();
  const Eigen::Index p = design.columns.cols();
  if (dtheta.size() != k)
    throw std::invalid_argument("measurement length " +
                                std::to_string(dtheta.size()) +
                                " does not match design rows " +
                                std::to_string(k));
  if (!dtheta.allFinite())
    throw std::invalid_argument("measurement contains NaN or Inf");
  if (max_steps < 1) throw std::invalid_argument("max_steps must be >= 1");

  const Eigen::MatrixXd& x = design.columns;
  const Eigen::VectorXd y =
      dtheta.array() - dtheta.mean();  // intercept handled by centering

  LassoPath path;
  path.max_steps = max_steps;
  const int l_total = design.total_columns;

  Eigen::VectorXd beta_std = Eigen::VectorXd::Zero(p);
  std::vector<int> active;          // column indices, entry order
  std::vector<char> is_active(static_cast<size_t>(p), 0);

  auto record = [&](double lambda) {
    Eigen::VectorXd beta_orig = Eigen::VectorXd::Zero(l_total);
    for (Eigen::Index j = 0; j < p; ++j) {
      const int pos = design.retained_pos[static_cast<size_t>(j)];
      beta_orig(pos) = beta_std(j) / design.scales(pos);
    }
    path.lambdas.push_back(lambda);
    path.betas.push_back(std::move(beta_orig));
    std::vector<int> ids;
    for (int j : active) ids.push_back(design.retained_ids[static_cast<size_t>(j)]);
    path.active_sets.push_back(std::move(ids));
  };

  Eigen::VectorXd r = y;
  Eigen::VectorXd corr = x.transpose() * r;
  double lambda = corr.cwiseAbs().maxCoeff();
  if (lambda <= 1e-14) {
    record(lambda);
    return path;
  }

  // first active column: most correlated, ties to the lower line id
  {
    Eigen::Index jbest = -1;
    for (Eigen::Index j = 0; j < p; ++j)
      if (std::abs(corr(j)) >= lambda - 1e-12 * std::max(1.0, lambda)) {
        jbest = j;
        break;  // retained_ids ascend with j
      }
    active.push_back(static_cast<int>(jbest));
    is_active[static_cast<size_t>(jbest)] = 1;
  }
  record(lambda);  // step 0: beta = 0, the first column just joined

  const double tiny = 1e-12;
  int steps = 0;
  while (steps < max_steps && lambda > tiny) {
    const Eigen::Index na = static_cast<Eigen::Index>(active.size());
    Eigen::MatrixXd xa(k, na);
    Eigen::VectorXd signs(na);
    for (Eigen::Index i = 0; i < na; ++i) {
      xa.col(i) = x.col(active[static_cast<size_t>(i)]);
      signs(i) = corr(active[static_cast<size_t>(i)]) >= 0.0 ? 1.0 : -1.0;
    }

    // direction toward the least-squares fit of the active set
    const Eigen::MatrixXd gram = xa.transpose() * xa;
    Eigen::VectorXd dir;
    bool solved = false;
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() == Eigen::Success) {
      dir = llt.solve(signs);
      solved = dir.allFinite();
    }
    if (!solved) {
      // exactly collinear active columns: minimum-norm direction
      dir = gram.completeOrthogonalDecomposition().solve(signs);
      path.degenerate = true;
    }

    const Eigen::VectorXd xdir = xa * dir;          // K-vector
    const Eigen::VectorXd adv = x.transpose() * xdir;  // correlation drift

    // largest admissible advance gamma in lambda: lambda_new = lambda - gamma
    double gamma = lambda;  // default: ride to lambda = 0
    Eigen::Index enter = -1;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (is_active[static_cast<size_t>(j)]) continue;
      const double c = corr(j), a = adv(j);
      for (double g : {(lambda - c) / (1.0 - a), (lambda + c) / (1.0 + a)}) {
        if (g > tiny && g < gamma - tiny) {
          gamma = g;
          enter = j;
        } else if (g > tiny && g < gamma + tiny && enter != -1 && j < enter) {
          enter = j;  // simultaneous arrivals: admit the lower line id
        }
      }
    }
    // lasso modification: drop an active coefficient that would cross zero
    Eigen::Index drop = -1;
    for (Eigen::Index i = 0; i < na; ++i) {
      const double b = beta_std(active[static_cast<size_t>(i)]);
      const double d = dir(i);
      if (d == 0.0) continue;
      const double g = -b / d;
      if (g > tiny && g < gamma - tiny) {
        gamma = g;
        drop = i;
        enter = -1;
      }
    }

    for (Eigen::Index i = 0; i < na; ++i)
      beta_std(active[static_cast<size_t>(i)]) += gamma * dir(i);
    lambda -= gamma;
    r = y - x * beta_std;
    corr = x.transpose() * r;

    if (drop >= 0) {
      beta_std(active[static_cast<size_t>(drop)]) = 0.0;  // crossed exactly
      is_active[static_cast<size_t>(active[static_cast<size_t>(drop)])] = 0;
      active.erase(active.begin() + static_cast<long>(drop));
    } else if (enter >= 0) {
      active.push_back(static_cast<int>(enter));
      is_active[static_cast<size_t>(enter)] = 1;
    }

    record(std::max(lambda, 0.0));
    ++steps;
    if (enter < 0 && drop < 0) break;           // rode the path to lambda = 0
    if (r.norm() < 1e-12) break;                // exact fit
    if (active.empty()) break;
  }
  return path;
}

inline LassoPath lars_path(const StandardizedDesign& design,
                           const Eigen::VectorXd& dtheta) {
  return lars_path(design, dtheta,
                   default_path_steps(static_cast<int>(design.columns.rows()),
                                      design.total_columns));
}

/// Pick "significantly non-zero" lines from the terminal path solution.
inline IdentificationResult select_outages(const LassoPath& path,
                                           const SelectionRule& rule = {}) {
  if (path.betas.empty()) throw std::invalid_argument("empty lasso path");
  IdentificationResult res;
  res.path = path;
  res.selection_rule = rule;
  const Eigen::VectorXd& beta = path.betas.back();
  if (rule.weights.size() != 0 && rule.weights.size() != beta.size())
    throw std::invalid_argument("selection weights length mismatch");
  if (rule.weights.size() != 0 && rule.weights.minCoeff() <= 0.0)
    throw std::invalid_argument("selection weights must be positive");
  auto magnitude = [&](int j) {
    const double m = std::abs(beta(j));
    return rule.weights.size() == 0 ? m : m / rule.weights(j);
  };

  std::vector<int> order;  // 0-based coefficient indices, nonzero only
  for (Eigen::Index j = 0; j < beta.size(); ++j)
    if (beta(j) != 0.0) order.push_back(static_cast<int>(j));
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double ma = magnitude(a), mb = magnitude(b);
    if (ma != mb) return ma > mb;
    return a < b;
  });

  if (rule.kind == SelectionRule::Kind::TopK) {
    if (rule.k < 1) throw std::invalid_argument("top-k rule needs k >= 1");
    if (static_cast<int>(order.size()) > rule.k)
      order.resize(static_cast<size_t>(rule.k));
  } else {
    if (rule.gamma <= 0.0 || rule.gamma > 1.0)
      throw std::invalid_argument("gamma must be in (0, 1]");
    const double cut = order.empty() ? 0.0 : rule.gamma * magnitude(order.front());
    while (!order.empty() && magnitude(order.back()) < cut) order.pop_back();
  }
  for (int j : order) {
    res.selected_lines.push_back(j + 1);
    res.coefficients.push_back(beta(j));
  }
  return res;
}

}  // namespace outid

#endif  // OUTID_LASSO_HPP
