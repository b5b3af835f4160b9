#pragma once

// Shared fixtures and independent reference implementations for the tests.
// The oracles deliberately use plain loops over scalars rather than the
// library's matrix expressions.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "rsma/dataset.hpp"
#include "rsma/model.hpp"
#include "rsma/pgd.hpp"
#include "rsma/unfold.hpp"

namespace rsma::testing {

using cd = std::complex<double>;

inline ChannelSample random_sample(int users, int antennas, std::uint64_t seed,
                                   double qos_shift = 0.0) {
  return generate_dataset(default_scenario(users, antennas), 1, seed, qos_shift).front();
}

/// Random beams with total power `fraction` of the budget and random R^c.
inline BeamState random_state(const ChannelSample& sample, std::uint64_t seed,
                              double fraction = 0.8) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int users = sample.num_users();
  const int antennas = sample.num_antennas();
  BeamState state = BeamState::zeros(antennas, users);
  for (int m = 0; m < antennas; ++m) {
    state.common[m] = {normal(rng), normal(rng)};
    for (int k = 0; k < users; ++k) state.priv(m, k) = {normal(rng), normal(rng)};
  }
  const double scale = std::sqrt(fraction * sample.config.power_budget() / state.transmit_power());
  state.common *= scale;
  state.priv *= scale;
  for (int k = 0; k < users; ++k) state.common_rate[k] = std::abs(normal(rng)) * 0.1;
  return state;
}

/// sum_m conj(a_m) b_m
inline cd inner(const CVector& a, const CVector& b) {
  cd total = 0.0;
  for (Eigen::Index m = 0; m < a.size(); ++m) total += std::conj(a[m]) * b[m];
  return total;
}

inline double interference_loop(const ChannelSample& s, const BeamState& st, int k) {
  double total = 0.0;
  for (int j = 0; j < s.num_users(); ++j)
    if (j != k) total += std::norm(inner(s.channels.col(k), st.priv.col(j)));
  return total;
}

inline double sinr_loop(const ChannelSample& s, const BeamState& st, int k) {
  return std::norm(inner(s.channels.col(k), st.priv.col(k))) /
         (s.config.noise_var + interference_loop(s, st, k));
}

inline double common_rate_loop(const ChannelSample& s, const BeamState& st, int k) {
  double denom = s.config.noise_var;
  for (int j = 0; j < s.num_users(); ++j) denom += std::norm(inner(s.channels.col(k), st.priv.col(j)));
  return std::log2(1.0 + std::norm(inner(s.channels.col(k), st.common)) / denom);
}

inline double wsr_loop(const ChannelSample& s, const BeamState& st) {
  double total = 0.0;
  for (int k = 0; k < s.num_users(); ++k)
    total += s.config.weights[k] * (st.common_rate[k] + std::log2(1.0 + sinr_loop(s, st, k)));
  return total;
}

inline AuxiliaryVars aux_loop(const ChannelSample& s, const BeamState& st) {
  AuxiliaryVars aux;
  aux.z.resize(s.num_users());
  for (int k = 0; k < s.num_users(); ++k)
    aux.z[k] = inner(s.channels.col(k), st.priv.col(k)) /
               (s.config.noise_var + interference_loop(s, st, k));
  double denom = s.config.noise_var;
  for (int j = 0; j < s.num_users(); ++j) denom += std::norm(inner(s.channels.col(0), st.priv.col(j)));
  aux.z0 = inner(s.channels.col(0), st.common) / denom;
  return aux;
}

inline PhiValues phi_loop(const ChannelSample& s, const BeamState& st, const AuxiliaryVars& aux) {
  PhiValues out;
  out.phi.resize(s.num_users());
  for (int k = 0; k < s.num_users(); ++k) {
    const cd g = inner(s.channels.col(k), st.priv.col(k));
    out.phi[k] = 1.0 + 2.0 * (std::conj(aux.z[k]) * g).real() -
                 std::norm(aux.z[k]) * (s.config.noise_var + interference_loop(s, st, k));
  }
  double denom = s.config.noise_var;
  for (int j = 0; j < s.num_users(); ++j) denom += std::norm(inner(s.channels.col(0), st.priv.col(j)));
  out.phi0 = 1.0 + 2.0 * (std::conj(aux.z0) * inner(s.channels.col(0), st.common)).real() -
             std::norm(aux.z0) * denom;
  return out;
}

inline double penalty_loop(const ChannelSample& s, const BeamState& st, const AuxiliaryVars& aux,
                           double lambda) {
  const PhiValues p = phi_loop(s, st, aux);
  double total = 0.0;
  double rc = 0.0;
  for (int k = 0; k < s.num_users(); ++k) {
    total += s.config.weights[k] * (st.common_rate[k] + std::log2(p.phi[k]));
    rc += st.common_rate[k];
  }
  return total - lambda * (rc - std::log2(p.phi0));
}

inline double violation_loop(const ChannelSample& s, const BeamState& st) {
  double power = 0.0;
  for (Eigen::Index m = 0; m < st.common.size(); ++m) power += std::norm(st.common[m]);
  for (Eigen::Index k = 0; k < st.priv.cols(); ++k)
    for (Eigen::Index m = 0; m < st.priv.rows(); ++m) power += std::norm(st.priv(m, k));
  double total = std::max(0.0, power + s.config.p_c_w - s.config.p_max_w);
  for (int k = 0; k < s.num_users(); ++k)
    total += std::max(0.0, s.config.qos_sinr[k] - sinr_loop(s, st, k));
  return total;
}

/// Loss from per-sample, per-layer WSR and violation tables (rows = samples,
/// column n = layer n, column 0 unused).
inline double loss_loop(const std::vector<std::vector<double>>& wsr,
                        const std::vector<std::vector<double>>& viol) {
  const double q = static_cast<double>(wsr.size());
  const int layers = static_cast<int>(wsr.front().size()) - 1;
  double a = 0.0;
  double b = 0.0;
  for (int n = 1; n <= layers; ++n) {
    double xi = 0.0;
    for (std::size_t i = 0; i < wsr.size(); ++i) {
      a += std::log2(n + 1.0) * wsr[i][n];
      xi += viol[i][n];
    }
    b += std::log2(n + 1.0) * xi / q;
  }
  return -a / (q * layers) + b;
}

/// Equality-constrained least squares via the full KKT system
///   [I  A^T] [x ]   [x0]
///   [A  0  ] [mu] = [b ]
/// solved with a complete orthogonal decomposition (least-norm on rank loss).
inline RVector kkt_project(const RVector& x0, const RMatrix& a, const RVector& b) {
  const Eigen::Index n = a.cols();
  const Eigen::Index m = a.rows();
  RMatrix kkt = RMatrix::Zero(n + m, n + m);
  kkt.topLeftCorner(n, n).setIdentity();
  kkt.topRightCorner(n, m) = a.transpose();
  kkt.bottomLeftCorner(m, n) = a;
  RVector rhs(n + m);
  rhs << x0, b;
  return Eigen::CompleteOrthogonalDecomposition<RMatrix>(kkt).solve(rhs).head(n);
}

/// Model whose layers reproduce pgd_step with the given config.
inline ModelParams pgd_equivalent_model(const ScenarioConfig& config, const PgdConfig& pgd,
                                        int layers) {
  const int users = config.num_users;
  ModelParams model;
  model.config = config;
  model.lambda = pgd.lambda;
  model.rate_step = pgd.rate_step[0];
  for (int n = 0; n < layers; ++n) {
    LayerParams layer = LayerParams::zeros(users);
    layer.w0[users] = pgd.common_step * pgd.lambda / (std::numbers::ln2 * config.p_max_w);
    for (int k = 0; k < users; ++k) {
      layer.w(k, users) = pgd.private_step[k] / (std::numbers::ln2 * config.p_max_w);
      layer.eta.row(k).setOnes();
      layer.eta(k, users) = pgd.lambda;
    }
    model.layers.push_back(layer);
  }
  return model;
}

inline double max_abs_diff(const BeamState& a, const BeamState& b) {
  return std::max({(a.common - b.common).cwiseAbs().maxCoeff(),
                   (a.priv - b.priv).cwiseAbs().maxCoeff(),
                   (a.common_rate - b.common_rate).cwiseAbs().maxCoeff()});
}

/// Relative error of one fitted positive scalar c: ||c g - fd|| / ||fd||.
inline double proportional_error(const RVector& g, const RVector& fd) {
  const double c = g.dot(fd) / g.squaredNorm();
  if (!(c > 0.0)) return INFINITY;
  return (c * g - fd).norm() / fd.norm();
}

inline RVector stack(const CVector& v) {
  RVector out(2 * v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out[2 * i] = v[i].real();
    out[2 * i + 1] = v[i].imag();
  }
  return out;
}

struct GradientCheck {
  double common = 0.0;              // d_v0 block
  std::vector<double> priv;         // one per d_vk block
  double rate = 0.0;                // d_rc block

  double worst() const {
    double w = std::max(common, rate);
    for (double p : priv) w = std::max(w, p);
    return w;
  }
};

/// Central differences of penalty_objective (aux held fixed) over stacked
/// real/imaginary coordinates, compared block-wise with gradients().
inline GradientCheck check_gradients(const ChannelSample& s, const BeamState& st,
                                     const AuxiliaryVars& aux, double lambda, double h = 1e-6) {
  const GradientSet g = gradients(s, st, aux, lambda);
  auto fd_block = [&](auto&& perturb, Eigen::Index n) {
    RVector fd(2 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (int part = 0; part < 2; ++part) {
        const cd delta = part == 0 ? cd(h, 0.0) : cd(0.0, h);
        BeamState plus = st;
        BeamState minus = st;
        perturb(plus, i, delta);
        perturb(minus, i, -delta);
        fd[2 * i + part] =
            (penalty_objective(s, plus, aux, lambda) - penalty_objective(s, minus, aux, lambda)) /
            (2.0 * h);
      }
    }
    return fd;
  };
  GradientCheck out;
  const Eigen::Index m = s.num_antennas();
  out.common = proportional_error(
      stack(g.d_v0), fd_block([](BeamState& x, Eigen::Index i, cd d) { x.common[i] += d; }, m));
  for (int k = 0; k < s.num_users(); ++k) {
    out.priv.push_back(proportional_error(
        stack(g.d_vk.col(k)),
        fd_block([k](BeamState& x, Eigen::Index i, cd d) { x.priv(i, k) += d; }, m)));
  }
  RVector fd_rate(s.num_users());
  for (int k = 0; k < s.num_users(); ++k) {
    BeamState plus = st;
    BeamState minus = st;
    plus.common_rate[k] += h;
    minus.common_rate[k] -= h;
    fd_rate[k] =
        (penalty_objective(s, plus, aux, lambda) - penalty_objective(s, minus, aux, lambda)) /
        (2.0 * h);
  }
  // d_rc is negative by construction; compare signed values directly.
  out.rate = (g.d_rc - fd_rate).norm() / fd_rate.norm();
  return out;
}

}  // namespace rsma::testing
