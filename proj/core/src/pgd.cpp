#include "rsma/pgd.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "rsma/errors.hpp"

namespace rsma {

namespace {

constexpr double kLn2 = std::numbers::ln2;

void require_positive(const PhiValues& values) {
  if (!values.all_positive() || !std::isfinite(values.phi0) || !values.phi.allFinite())
    throw NumericalError("nonpositive or non-finite Phi; log2 undefined");
}

}  // namespace

void PgdConfig::validate(const ScenarioConfig& scenario) const {
  const int users = scenario.num_users;
  if (rate_step.size() != users || private_step.size() != users)
    throw ValidationError("pgd step vectors must have one entry per user");
  if ((rate_step.array() < 0.0).any() || (private_step.array() < 0.0).any() || common_step < 0.0)
    throw ValidationError("pgd step sizes must be >= 0");
  if (!(lambda > scenario.weights.maxCoeff()))
    throw ValidationError("lambda must exceed max alpha_k");
  if (max_iters < 0) throw ValidationError("max_iters must be >= 0");
  if (!(tol > 0.0)) throw ValidationError("tol must be > 0");
}

PgdConfig default_pgd_config(const ScenarioConfig& scenario) {
  PgdConfig config;
  config.rate_step = RVector::Constant(scenario.num_users, 0.05);
  config.private_step = RVector::Constant(scenario.num_users, 0.05);
  config.common_step = 0.05;
  config.lambda = 2.0 * scenario.weights.maxCoeff();
  return config;
}

PgdConfig oracle_pgd_config(const ScenarioConfig& scenario) {
  PgdConfig config = default_pgd_config(scenario);
  config.backtracking = true;
  config.max_iters = 2000;
  return config;
}

AuxiliaryVars update_aux(const ChannelSample& sample, const BeamState& state) {
  check_dimensions(sample, state);
  const CMatrix gains = private_gains(sample, state);
  const double noise = sample.config.noise_var;
  const int users = sample.num_users();
  AuxiliaryVars aux;
  aux.z.resize(users);
  for (int k = 0; k < users; ++k) {
    const double interference = gains.row(k).squaredNorm() - std::norm(gains(k, k));
    aux.z[k] = gains(k, k) / (noise + interference);
  }
  const std::complex<double> common = sample.channels.col(0).dot(state.common);
  aux.z0 = common / (noise + gains.row(0).squaredNorm());
  return aux;
}

PhiValues phi(const ChannelSample& sample, const BeamState& state, const AuxiliaryVars& aux) {
  check_dimensions(sample, state);
  const CMatrix gains = private_gains(sample, state);
  const double noise = sample.config.noise_var;
  const int users = sample.num_users();
  PhiValues out;
  out.phi.resize(users);
  for (int k = 0; k < users; ++k) {
    const double interference = gains.row(k).squaredNorm() - std::norm(gains(k, k));
    out.phi[k] = 1.0 + 2.0 * std::real(std::conj(aux.z[k]) * gains(k, k)) -
                 std::norm(aux.z[k]) * (noise + interference);
  }
  const std::complex<double> common = sample.channels.col(0).dot(state.common);
  out.phi0 = 1.0 + 2.0 * std::real(std::conj(aux.z0) * common) -
             std::norm(aux.z0) * (noise + gains.row(0).squaredNorm());
  return out;
}

double penalty_objective(const ChannelSample& sample, const BeamState& state,
                         const AuxiliaryVars& aux, double lambda) {
  const PhiValues values = phi(sample, state, aux);
  require_positive(values);
  const auto& weights = sample.config.weights;
  double total = 0.0;
  for (int k = 0; k < sample.num_users(); ++k)
    total += weights[k] * (state.common_rate[k] + std::log2(values.phi[k]));
  return total - lambda * (state.common_rate.sum() - std::log2(values.phi0));
}

GradientSet gradients(const ChannelSample& sample, const BeamState& state,
                      const AuxiliaryVars& aux, double lambda) {
  GradientSet g;
  g.phi = phi(sample, state, aux);
  require_positive(g.phi);

  const int users = sample.num_users();
  const int antennas = sample.num_antennas();
  const CMatrix& h = sample.channels;
  const CMatrix gains = private_gains(sample, state);
  const auto& weights = sample.config.weights;

  g.d_rc = (weights.array() - lambda).matrix();
  g.d_v0 = (2.0 * lambda * aux.z0 / (g.phi.phi0 * kLn2)) * h.col(0);

  g.zeta.resize(antennas, users);
  g.o.resize(antennas, users);
  g.d_vk.resize(antennas, users);
  g.beta.assign(users, CMatrix::Zero(antennas, users));
  const double o_scale = -2.0 * lambda * std::norm(aux.z0) / (g.phi.phi0 * kLn2);
  for (int k = 0; k < users; ++k) {
    g.zeta.col(k) = (2.0 * weights[k] * aux.z[k] / kLn2) * h.col(k);
    g.o.col(k) = (o_scale * gains(0, k)) * h.col(0);
    CVector direction = g.zeta.col(k) / g.phi.phi[k] + g.o.col(k);
    for (int j = 0; j < users; ++j) {
      if (j == k) continue;
      g.beta[k].col(j) = (-2.0 * std::norm(aux.z[j]) * weights[j] * gains(j, k) / kLn2) * h.col(j);
      direction += g.beta[k].col(j) / g.phi.phi[j];
    }
    g.d_vk.col(k) = direction;
  }
  return g;
}

BeamState pgd_step(const ChannelSample& sample, const BeamState& state, const AuxiliaryVars& aux,
                   const PgdConfig& config) {
  const GradientSet g = gradients(sample, state, aux, config.lambda);
  BeamState moved = state;
  moved.common_rate += config.rate_step.cwiseProduct(g.d_rc);
  moved.common += config.common_step * g.d_v0;
  for (int k = 0; k < sample.num_users(); ++k)
    moved.priv.col(k) += config.private_step[k] * g.d_vk.col(k);
  return project(sample, moved, ProjectionMode::always);
}

PgdResult pgd_solve(const ChannelSample& sample, const PgdConfig& config, const BeamState& init) {
  config.validate(sample.config);
  PgdResult result;
  BeamState state = project(sample, init, ProjectionMode::always);
  double current = wsr(sample, state);

  auto consider = [&](const BeamState& candidate, double value, int iter) {
    const bool feasible = check_feasibility(sample, candidate).feasible;
    result.trace.push_back({iter, value, feasible});
    const bool better = (feasible && !result.best_feasible) ||
                        (feasible == result.best_feasible && value > result.best_wsr);
    if (iter == 0 || better) {
      result.best = candidate;
      result.best_wsr = value;
      result.best_feasible = feasible;
    }
  };
  consider(state, current, 0);

  for (int iter = 1; iter <= config.max_iters; ++iter) {
    const AuxiliaryVars aux = update_aux(sample, state);
    PgdConfig scaled = config;
    BeamState candidate;
    double value = 0.0;
    bool improved = false;
    for (int halving = 0; halving <= (config.backtracking ? config.max_halvings : 0); ++halving) {
      candidate = pgd_step(sample, state, aux, scaled);
      value = wsr(sample, candidate);
      if (!config.backtracking || value >= current) {
        improved = true;
        break;
      }
      scaled.rate_step *= 0.5;
      scaled.common_step *= 0.5;
      scaled.private_step *= 0.5;
    }
    result.iterations = iter;
    if (!improved) {
      // No step size increases WSR: treat as a stationary point.
      result.converged = true;
      break;
    }
    const double change = std::abs(value - current);
    state = std::move(candidate);
    current = value;
    consider(state, current, iter);
    if (change < config.tol) {
      result.converged = true;
      break;
    }
  }
  if (config.max_iters == 0) result.converged = true;
  return result;
}

std::string trace_csv(const std::vector<PgdTracePoint>& trace) {
  std::ostringstream out;
  out.precision(17);
  out << "iter,wsr,feasible\n";
  for (const auto& point : trace)
    out << point.iter << ',' << point.wsr << ',' << (point.feasible ? 1 : 0) << '\n';
  return out.str();
}

}  // namespace rsma
