#ifndef OUTID_POWERFLOW_HPP
#define OUTID_POWERFLOW_HPP

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "outid/network.hpp"

namespace outid {

struct PowerFlowOptions {
  double tolerance = 1e-8;
  int max_iterations = 20;
};

struct SteadyState {
  Eigen::VectorXd theta;  // radians, reference entry exactly 0
  Eigen::VectorXd vmag;   // p.u.
  Eigen::VectorXd p, q;   // net injections realized at the solution
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;  // final mismatch inf-norm
};

struct JacobianBlocks {
  Eigen::MatrixXd j1;  // dP/dtheta over non-reference buses
  Eigen::MatrixXd j2;  // dP/dV over non-reference buses
  int reference_bus = 0;
};

namespace detail {

inline void injections_at(const Eigen::MatrixXcd& y,
                          const Eigen::VectorXd& theta,
                          const Eigen::VectorXd& vmag, Eigen::VectorXd& p,
                          Eigen::VectorXd& q) {
  const int n = static_cast<int>(theta.size());
  p.resize(n);
  q.resize(n);
  for (int m = 0; m < n; ++m) {
    double pm = 0.0, qm = 0.0;
    for (int k = 0; k < n; ++k) {
      const Complex ymk = y(m, k);
      if (ymk == Complex(0.0, 0.0)) continue;
      const double g = ymk.real(), b = ymk.imag();
      const double d = theta(m) - theta(k);
      const double vv = vmag(m) * vmag(k);
      pm += vv * (g * std::cos(d) + b * std::sin(d));
      qm += vv * (g * std::sin(d) - b * std::cos(d));
    }
    p(m) = pm;
    q(m) = qm;
  }
}

}  // namespace detail

/// Newton-Raphson from flat start. P mismatch on PV+PQ buses, Q mismatch on
/// PQ buses; iteration order is fixed so the result is bitwise reproducible.
inline SteadyState solve_power_flow(const NetworkModel& model,
                                    const PowerFlowOptions& options = {}) {
  const int n = model.bus_count();
  const Eigen::MatrixXcd& y = model.admittance;
  const int ref = model.reference_bus() - 1;

  std::vector<int> pvpq, pq;  // 0-based
  for (const auto& b : model.buses) {
    if (b.kind == BusKind::Reference) continue;
    pvpq.push_back(b.id - 1);
    if (b.kind == BusKind::Load) pq.push_back(b.id - 1);
  }

  SteadyState st;
  st.theta = Eigen::VectorXd::Zero(n);
  st.vmag = Eigen::VectorXd::Ones(n);
  Eigen::VectorXd p_spec(n), q_spec(n);
  for (const auto& b : model.buses) {
    p_spec(b.id - 1) = b.p_inject();
    q_spec(b.id - 1) = b.q_inject();
    if (b.kind != BusKind::Load) st.vmag(b.id - 1) = b.v_setpoint;
  }

  const int np = static_cast<int>(pvpq.size());
  const int nq = static_cast<int>(pq.size());
  Eigen::VectorXd pcalc, qcalc;
  for (st.iterations = 0; st.iterations <= options.max_iterations;
       ++st.iterations) {
    detail::injections_at(y, st.theta, st.vmag, pcalc, qcalc);
    Eigen::VectorXd mis(np + nq);
    for (int i = 0; i < np; ++i) mis(i) = p_spec(pvpq[static_cast<size_t>(i)]) - pcalc(pvpq[static_cast<size_t>(i)]);
    for (int i = 0; i < nq; ++i) mis(np + i) = q_spec(pq[static_cast<size_t>(i)]) - qcalc(pq[static_cast<size_t>(i)]);
    st.residual = mis.size() == 0 ? 0.0 : mis.cwiseAbs().maxCoeff();
    if (st.residual <= options.tolerance) {
      st.converged = true;
      break;
    }
    if (st.iterations == options.max_iterations || !std::isfinite(st.residual))
      break;

    // Mismatch Jacobian over unknowns [theta(pvpq); vmag(pq)].
    Eigen::MatrixXd jac(np + nq, np + nq);
    for (int a = 0; a < np; ++a) {
      const int m = pvpq[static_cast<size_t>(a)];
      for (int b = 0; b < np; ++b) {
        const int k = pvpq[static_cast<size_t>(b)];
        double v;
        if (m == k) {
          v = -qcalc(m) - y(m, m).imag() * st.vmag(m) * st.vmag(m);
        } else {
          const double d = st.theta(m) - st.theta(k);
          v = st.vmag(m) * st.vmag(k) *
              (y(m, k).real() * std::sin(d) - y(m, k).imag() * std::cos(d));
        }
        jac(a, b) = v;
      }
      for (int b = 0; b < nq; ++b) {
        const int k = pq[static_cast<size_t>(b)];
        double v;
        if (m == k) {
          v = pcalc(m) / st.vmag(m) + y(m, m).real() * st.vmag(m);
        } else {
          const double d = st.theta(m) - st.theta(k);
          v = st.vmag(m) *
              (y(m, k).real() * std::cos(d) + y(m, k).imag() * std::sin(d));
        }
        jac(a, np + b) = v;
      }
    }
    for (int a = 0; a < nq; ++a) {
      const int m = pq[static_cast<size_t>(a)];
      for (int b = 0; b < np; ++b) {
        const int k = pvpq[static_cast<size_t>(b)];
        double v;
        if (m == k) {
          v = pcalc(m) - y(m, m).real() * st.vmag(m) * st.vmag(m);
        } else {
          const double d = st.theta(m) - st.theta(k);
          v = -st.vmag(m) * st.vmag(k) *
              (y(m, k).real() * std::cos(d) + y(m, k).imag() * std::sin(d));
        }
        jac(np + a, b) = v;
      }
      for (int b = 0; b < nq; ++b) {
        const int k = pq[static_cast<size_t>(b)];
        double v;
        if (m == k) {
          v = qcalc(m) / st.vmag(m) - y(m, m).imag() * st.vmag(m);
        } else {
          const double d = st.theta(m) - st.theta(k);
          v = st.vmag(m) *
              (y(m, k).real() * std::sin(d) - y(m, k).imag() * std::cos(d));
        }
        jac(np + a, np + b) = v;
      }
    }

    Eigen::VectorXd dx = jac.partialPivLu().solve(mis);
    if (!dx.allFinite()) break;  // singular Jacobian, give up
    for (int i = 0; i < np; ++i) st.theta(pvpq[static_cast<size_t>(i)]) += dx(i);
    for (int i = 0; i < nq; ++i) st.vmag(pq[static_cast<size_t>(i)]) += dx(np + i);
    st.theta(ref) = 0.0;
  }

  detail::injections_at(y, st.theta, st.vmag, st.p, st.q);
  return st;
}

/// Full dP/dtheta and dP/dV blocks over all non-reference buses, evaluated at
/// the given operating point. No PV/PQ reduction here: the sensitivity used by
/// the signature map treats every non-reference angle as free.
inline JacobianBlocks jacobian_at(const NetworkModel& model,
                                  const SteadyState& state) {
  const int n = model.bus_count();
  if (state.theta.size() != n || state.vmag.size() != n)
    throw std::invalid_argument("state dimensions do not match the model");
  const Eigen::MatrixXcd& y = model.admittance;
  const int ref = model.reference_bus() - 1;

  JacobianBlocks out;
  out.reference_bus = ref + 1;
  out.j1.resize(n - 1, n - 1);
  out.j2.resize(n - 1, n - 1);
  std::vector<int> keep;
  for (int i = 0; i < n; ++i)
    if (i != ref) keep.push_back(i);

  for (int a = 0; a < n - 1; ++a) {
    const int m = keep[static_cast<size_t>(a)];
    double diag1 = 0.0;
    for (int k = 0; k < n; ++k) {
      if (k == m) continue;
      const double ymag = std::abs(y(m, k));
      if (ymag == 0.0) continue;
      const double alpha = std::arg(y(m, k));
      // dPm/dtheta_k = Vm Vk |Ymk| sin(theta_m - theta_k - alpha_mk)
      diag1 -= state.vmag(m) * state.vmag(k) * ymag *
               std::sin(state.theta(m) - state.theta(k) - alpha);
    }
    for (int b = 0; b < n - 1; ++b) {
      const int k = keep[static_cast<size_t>(b)];
      if (m == k) {
        out.j1(a, b) = diag1;  // negated sum of the off-diagonal terms
        double d2 = 2.0 * state.vmag(m) * std::abs(y(m, m)) *
                    std::cos(-std::arg(y(m, m)));
        for (int kk = 0; kk < n; ++kk) {
          if (kk == m) continue;
          const double ymag = std::abs(y(m, kk));
          if (ymag == 0.0) continue;
          d2 += state.vmag(kk) * ymag *
                std::cos(state.theta(m) - state.theta(kk) - std::arg(y(m, kk)));
        }
        out.j2(a, b) = d2;
      } else {
        const double ymag = std::abs(y(m, k));
        const double alpha = ymag == 0.0 ? 0.0 : std::arg(y(m, k));
        out.j1(a, b) = state.vmag(m) * state.vmag(k) * ymag *
                       std::sin(state.theta(m) - state.theta(k) - alpha);
        out.j2(a, b) = state.vmag(m) * ymag *
                       std::cos(state.theta(m) - state.theta(k) - alpha);
      }
    }
  }
  return out;
}

/// Post-minus-pre angle change restricted to PMU buses, ascending bus id.
inline Eigen::VectorXd angle_delta(const SteadyState& pre,
                                   const SteadyState& post,
                                   const std::vector<int>& pmu_buses) {
  if (!pre.converged || !post.converged)
    throw std::invalid_argument("angle_delta requires converged states");
  if (pre.theta.size() != post.theta.size())
    throw std::invalid_argument("state dimensions differ");
  std::vector<int> sorted = pmu_buses;
  std::sort(sorted.begin(), sorted.end());
  Eigen::VectorXd out(static_cast<Eigen::Index>(sorted.size()));
  for (size_t i = 0; i < sorted.size(); ++i) {
    const int b = sorted[i];
    if (b < 1 || b > pre.theta.size())
      throw std::out_of_range("PMU bus id out of range");
    out(static_cast<Eigen::Index>(i)) = post.theta(b - 1) - pre.theta(b - 1);
  }
  return out;
}

}  // namespace outid

#endif  // OUTID_POWERFLOW_HPP
