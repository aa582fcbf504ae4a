#ifndef OUTID_SIGNATURE_HPP
#define OUTID_SIGNATURE_HPP

#include <algorithm>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "outid/network.hpp"
#include "outid/powerflow.hpp"

namespace outid {

struct PmuPlacement {
  std::vector<int> buses;  // sorted ascending, 1-based

  static PmuPlacement of(std::vector<int> ids, int bus_count) {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    if (ids.empty()) throw std::invalid_argument("empty PMU placement");
    if (ids.front() < 1 || ids.back() > bus_count)
      throw std::out_of_range("PMU bus id out of range");
    return PmuPlacement{std::move(ids)};
  }
  int size() const { return static_cast<int>(buses.size()); }
};

struct SignatureMap {
  Eigen::MatrixXd f;  // K x L
  PmuPlacement placement;
  std::vector<int> line_ids;  // column order, 1-based
  int reference_bus = 0;
};

namespace detail {

/// Incidence matrix with the reference row deleted; columns cover every line.
inline Eigen::MatrixXd reduced_incidence(const NetworkModel& model, int ref) {
  const int n = model.bus_count();
  Eigen::MatrixXd m(n - 1, model.line_count());
  int r = 0;
  for (int i = 0; i < n; ++i) {
    if (i + 1 == ref) continue;
    m.row(r++) = model.incidence.row(i);
  }
  return m;
}

/// Select PMU rows out of the reference-deleted full map. A PMU on the
/// reference bus contributes a structurally zero row.
inline SignatureMap select_rows(const Eigen::MatrixXd& full,
                                const NetworkModel& model,
                                const PmuPlacement& placement, int ref) {
  SignatureMap map;
  map.placement = placement;
  map.reference_bus = ref;
  map.f.setZero(placement.size(), model.line_count());
  for (int k = 0; k < placement.size(); ++k) {
    const int bus = placement.buses[static_cast<size_t>(k)];
    if (bus == ref) continue;
    const int row = bus < ref ? bus - 1 : bus - 2;
    map.f.row(k) = full.row(row);
  }
  map.line_ids.resize(static_cast<size_t>(model.line_count()));
  for (int l = 0; l < model.line_count(); ++l)
    map.line_ids[static_cast<size_t>(l)] = l + 1;
  return map;
}

template <typename Solver>
inline Eigen::MatrixXd solve_all_lines(const Solver& lu,
                                       const Eigen::MatrixXd& m_reduced) {
  Eigen::MatrixXd x = lu.solve(m_reduced);
  if (!x.allFinite())
    throw std::runtime_error("sensitivity matrix is singular");
  return x;
}

}  // namespace detail

/// Outage signature map from the angle sensitivity at the operating point:
/// factor J once, solve one right-hand side per line, then select PMU rows.
inline SignatureMap build_signature_map(const NetworkModel& model,
                                        const SteadyState& state,
                                        const PmuPlacement& placement) {
  if (!state.converged)
    throw std::invalid_argument("signature map needs a converged state");
  const int ref = model.reference_bus();
  const JacobianBlocks jac = jacobian_at(model, state);
  const Eigen::MatrixXd m_red = detail::reduced_incidence(model, ref);

  Eigen::FullPivLU<Eigen::MatrixXd> lu(jac.j1);
  if (!lu.isInvertible()) {
    throw std::runtime_error(
        "angle sensitivity matrix is singular (rcond ~ " +
        std::to_string(lu.rcond()) + ")");
  }
  const Eigen::MatrixXd full = detail::solve_all_lines(lu, m_red);
  return detail::select_rows(full, model, placement, ref);
}

/// DC power-flow susceptance matrix over non-reference buses, built from the
/// 1/x series terms of in-service branches.
inline Eigen::MatrixXd dc_matrix(const NetworkModel& model) {
  const int n = model.bus_count();
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
  for (const auto& br : model.branches) {
    if (!br.in_service) continue;
    if (br.x == 0.0)
      throw std::invalid_argument("branch " + std::to_string(br.id) +
                                  " has zero reactance");
    const double w = 1.0 / br.x;
    const int f = br.from_bus - 1, t = br.to_bus - 1;
    b(f, f) += w;
    b(t, t) += w;
    b(f, t) -= w;
    b(t, f) -= w;
  }
  const int ref = model.reference_bus();
  Eigen::MatrixXd red(n - 1, n - 1);
  int r = 0;
  for (int i = 0; i < n; ++i) {
    if (i + 1 == ref) continue;
    int c = 0;
    for (int j = 0; j < n; ++j) {
      if (j + 1 == ref) continue;
      red(r, c++) = b(i, j);
    }
    ++r;
  }
  return red;
}

/// Per-line equivalent power transfer of an outage, estimated offline from
/// the operating point: the pre-outage real power flow on the line amplified
/// by the self-distribution factor, |f_l| / (1 - PTDF_ll). Removing a line
/// redistributes its flow through the rest of the network, and the amplifier
/// accounts for the share the line would have carried itself. Used to bring
/// lasso coefficients (flow times indicator) back to a comparable scale when
/// selecting significant lines. The floor keeps lightly loaded lines from
/// dominating after division.
inline Eigen::VectorXd line_transfer_estimates(const NetworkModel& model,
                                               const SteadyState& state,
                                               double floor = 0.02) {
  if (!state.converged)
    throw std::invalid_argument("transfer estimates need a converged state");
  const Eigen::MatrixXd bp = dc_matrix(model);
  const Eigen::MatrixXd m_red =
      detail::reduced_incidence(model, model.reference_bus());
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(bp);
  Eigen::VectorXd w(model.line_count());
  for (int l = 0; l < model.line_count(); ++l) {
    const Branch& br = model.branches[static_cast<size_t>(l)];
    const std::complex<double> ys = br.series_admittance();
    const double t = br.tap > 0.0 ? br.tap : 1.0;
    const std::complex<double> yff =
        (ys + std::complex<double>(0.0, br.b_charging / 2.0)) / (t * t);
    const std::complex<double> yft = -ys / t;
    const std::complex<double> vf =
        std::polar(state.vmag(br.from_bus - 1), state.theta(br.from_bus - 1));
    const std::complex<double> vt =
        std::polar(state.vmag(br.to_bus - 1), state.theta(br.to_bus - 1));
    const double flow = (vf * std::conj(yff * vf + yft * vt)).real();
    const Eigen::VectorXd v = lu.solve(m_red.col(l));
    const double ptdf = m_red.col(l).dot(v) / br.x;
    w(l) = std::max(std::abs(flow) / std::max(1e-6, 1.0 - ptdf), floor);
  }
  return w;
}

/// DC baseline map: same pipeline with J replaced by the B' matrix.
inline SignatureMap dc_signature_map(const NetworkModel& model,
                                     const PmuPlacement& placement) {
  const int ref = model.reference_bus();
  const Eigen::MatrixXd bp = dc_matrix(model);
  const Eigen::MatrixXd m_red = detail::reduced_incidence(model, ref);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(bp);
  if (!lu.isInvertible())
    throw std::runtime_error("DC susceptance matrix is singular");
  const Eigen::MatrixXd full = detail::solve_all_lines(lu, m_red);
  return detail::select_rows(full, model, placement, ref);
}

}  // namespace outid

#endif  // OUTID_SIGNATURE_HPP
