#include "rsma/projection.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "rsma/errors.hpp"

namespace rsma {

PowerSplit power_split(const ChannelSample& sample, const BeamState& state) {
  check_dimensions(sample, state);
  const int users = sample.num_users();
  PowerSplit split;
  split.a.resize(users + 1);
  split.v_bar.resize(sample.num_antennas(), users + 1);
  for (int k = 0; k <= users; ++k) {
    const bool is_common = k == users;
    const auto beam = is_common ? state.common : CVector(state.priv.col(k));
    const double power = beam.squaredNorm();
    split.a[k] = power;
    if (power >= kZeroPowerEps) {
      split.v_bar.col(k) = beam / std::sqrt(power);
    } else {
      const CVector h = sample.channels.col(is_common ? 0 : k);
      const double norm = h.norm();
      split.v_bar.col(k) = norm > 0.0 ? CVector(h / norm)
                                      : CVector(CVector::Unit(sample.num_antennas(), 0));
    }
  }
  return split;
}

ProjectionSystem build_constraint_system(const ChannelSample& sample, const PowerSplit& split) {
  const int users = sample.num_users();
  const int n = users + 1;
  if (split.a.size() != n || split.v_bar.cols() != n || split.v_bar.rows() != sample.num_antennas())
    throw ValidationError("power split does not match sample dimensions");

  ProjectionSystem system;
  system.a = split.a;
  system.v_bar = split.v_bar;
  system.a_aug = RMatrix::Zero(n, 2 * n);
  system.b.resize(n);

  // |h_k^H v_bar_j|^2 for private directions only; the common column stays 0.
  const RMatrix gains =
      (sample.channels.adjoint() * split.v_bar.leftCols(users)).cwiseAbs2();
  const auto& qos = sample.config.qos_sinr;
  for (int k = 0; k < users; ++k) {
    for (int j = 0; j < users; ++j)
      system.a_aug(k, j) = j == k ? gains(k, k) : -qos[k] * gains(k, j);
    system.b[k] = qos[k] * sample.config.noise_var;
  }
  system.a_aug.row(users).head(n).setConstant(-1.0);
  system.b[users] = -sample.config.power_budget();
  system.a_aug.rightCols(n) = -RMatrix::Identity(n, n);
  return system;
}

namespace {

RVector solve_gram(const RMatrix& gram, const RVector& rhs, double& condition) {
  Eigen::LLT<RMatrix> llt(gram);
  if (llt.info() == Eigen::Success) {
    const RVector diag = llt.matrixLLT().diagonal();
    const double ratio = diag.minCoeff() / diag.maxCoeff();
    condition = 1.0 / (ratio * ratio);
    if (ratio > 1e-5) return llt.solve(rhs);
  }
  Eigen::SelfAdjointEigenSolver<RMatrix> eig(gram);
  const RVector& values = eig.eigenvalues();
  const double top = values.cwiseAbs().maxCoeff();
  const double cutoff = 1e-10 * top;
  RVector inv(values.size());
  double smallest_kept = top;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values[i] > cutoff) {
      inv[i] = 1.0 / values[i];
      smallest_kept = std::min(smallest_kept, values[i]);
    } else {
      inv[i] = 0.0;
    }
  }
  condition = top > 0.0 ? top / smallest_kept : INFINITY;
  const RMatrix& vecs = eig.eigenvectors();
  return vecs * inv.asDiagonal() * (vecs.transpose() * rhs);
}

}  // namespace

ProjectedPowers affine_project(const RVector& a, const RMatrix& a_aug, const RVector& b) {
  const Eigen::Index n = a.size();
  if (a_aug.rows() != b.size() || a_aug.cols() < n)
    throw ValidationError("affine_project: inconsistent system dimensions");

  RVector a_tilde = RVector::Zero(a_aug.cols());
  a_tilde.head(n) = a;
  const RVector violation = a_aug * a_tilde - b;
  const RMatrix gram = a_aug * a_aug.transpose();
  double condition = 0.0;
  const RVector multiplier = solve_gram(gram, violation, condition);
  const RVector x = a_tilde - a_aug.transpose() * multiplier;

  if (!x.allFinite()) {
    std::ostringstream msg;
    msg << "affine projection produced non-finite powers (Gram condition ~" << condition << ")";
    throw NumericalError(msg.str());
  }
  ProjectedPowers out;
  out.omega = x.head(n);
  out.psi = x.tail(a_aug.cols() - n);
  out.residual = (a_aug * x - b).norm();
  return out;
}

ProjectedPowers affine_project(const ProjectionSystem& system) {
  return affine_project(system.a, system.a_aug, system.b);
}

ProjectedPowers project_powers(const ProjectionSystem& system) {
  const int n = system.size();
  const auto constraints = system.constraint_matrix();
  std::vector<bool> pinned(n, false);
  std::vector<bool> zeroed(n, false);
  const double budget = -system.b[n - 1];
  const double budget_scale = std::max(1.0, budget);

  ProjectedPowers result = affine_project(system);
  for (int round = 0; round < 2 * n; ++round) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      if (!pinned[i] && result.psi[i] < 0.0) pinned[i] = changed = true;
      if (!zeroed[i] && result.omega[i] < 0.0) zeroed[i] = changed = true;
    }
    if (!changed) break;

    int free_count = 0;
    int zero_count = 0;
    for (int i = 0; i < n; ++i) {
      free_count += pinned[i] ? 0 : 1;
      zero_count += zeroed[i] ? 1 : 0;
    }
    RMatrix a_aug = RMatrix::Zero(n + zero_count, n + free_count);
    a_aug.topLeftCorner(n, n) = constraints;
    RVector b = RVector::Zero(n + zero_count);
    b.head(n) = system.b;
    std::vector<int> free_rows;
    for (int i = 0; i < n; ++i) {
      if (pinned[i]) {
        b[i] += 1e-12 * (std::abs(b[i]) + constraints.row(i).cwiseAbs().sum() * budget_scale);
      } else {
        a_aug(i, n + static_cast<Eigen::Index>(free_rows.size())) = -1.0;
        free_rows.push_back(i);
      }
    }
    // Powers that went negative are held at zero.
    for (int i = 0, row = n; i < n; ++i)
      if (zeroed[i]) a_aug(row++, i) = 1.0;

    const ProjectedPowers reduced = affine_project(system.a, a_aug, b);
    result.omega = reduced.omega;
    result.residual = reduced.residual;
    result.psi = RVector::Zero(n);
    for (std::size_t f = 0; f < free_rows.size(); ++f) result.psi[free_rows[f]] = reduced.psi[f];
  }

  for (int i = 0; i < n; ++i)
    if (zeroed[i] || result.omega[i] < 0.0) result.omega[i] = 0.0;
  // When the QoS rows cannot all be met inside the budget the least-squares
  // compromise can overshoot the power row; scale back onto it.
  const double total = result.omega.sum();
  if (total > budget) result.omega *= std::max(budget, 0.0) / total;
  return result;
}

BeamState apply_power(const CMatrix& v_bar, const RVector& omega) {
  const Eigen::Index n = omega.size();
  if (v_bar.cols() != n || n < 2) throw ValidationError("apply_power: omega/v_bar size mismatch");
  const int users = static_cast<int>(n - 1);
  BeamState state;
  state.priv.resize(v_bar.rows(), users);
  for (int k = 0; k < users; ++k) state.priv.col(k) = std::sqrt(std::max(omega[k], 0.0)) * v_bar.col(k);
  state.common = std::sqrt(std::max(omega[users], 0.0)) * v_bar.col(users);
  state.common_rate = RVector::Zero(users);
  return state;
}

RVector project_common_rate(const ChannelSample& sample, const BeamState& state) {
  const double capacity = std::max(0.0, common_rate_capacity(sample, state));
  const auto& weights = sample.config.weights;
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < weights.size(); ++k)
    if (weights[k] > weights[best]) best = k;
  RVector rates = RVector::Zero(sample.num_users());
  rates[best] = capacity;
  return rates;
}

BeamState project(const ChannelSample& sample, const BeamState& state, ProjectionMode mode) {
  if (mode == ProjectionMode::skip_if_feasible) {
    const FeasibilityReport report = check_feasibility(sample, state, 0.0);
    if (report.power_margin >= 0.0 && report.sinr_margins.minCoeff() >= 0.0) {
      BeamState out = state;
      out.common_rate = project_common_rate(sample, out);
      return out;
    }
  }
  const PowerSplit split = power_split(sample, state);
  const ProjectionSystem system = build_constraint_system(sample, split);
  const ProjectedPowers powers = project_powers(system);
  BeamState out = apply_power(split.v_bar, powers.omega);
  out.common_rate = project_common_rate(sample, out);
  return out;
}

std::string projection_debug_json(const ProjectionSystem& system, const ProjectedPowers& result) {
  using nlohmann::json;
  auto vec = [](const RVector& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
  };
  json j;
  json rows = json::array();
  for (Eigen::Index r = 0; r < system.a_aug.rows(); ++r) rows.push_back(vec(system.a_aug.row(r)));
  j["a_aug"] = std::move(rows);
  j["b"] = vec(system.b);
  j["a"] = vec(system.a);
  RVector x(result.omega.size() + result.psi.size());
  x << result.omega, result.psi;
  j["omega_tilde"] = vec(x);
  j["residual"] = result.residual;
  return j.dump(2);
}

}  // namespace rsma
