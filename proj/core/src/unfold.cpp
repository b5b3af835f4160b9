#include "rsma/unfold.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "rsma/errors.hpp"
#include "rsma/projection.hpp"

namespace rsma {

namespace {

constexpr double kLn2 = std::numbers::ln2;

void accumulate_state(const ChannelSample& sample, const BeamState& state, double& wsr_out,
                      double& violation_out) {
  wsr_out = wsr(sample, state);
  violation_out = violation_term(sample, state);
}

}  // namespace

LayerParams LayerParams::zeros(int num_users) {
  LayerParams layer;
  layer.w0 = RVector::Zero(num_users + 1);
  layer.w = RMatrix::Zero(num_users, num_users + 1);
  layer.eta = RMatrix::Zero(num_users, num_users + 1);
  return layer;
}

RVector ModelParams::flatten() const {
  RVector flat(parameter_count());
  Eigen::Index at = 0;
  for (const auto& layer : layers) {
    for (Eigen::Index i = 0; i < layer.w0.size(); ++i) flat[at++] = layer.w0[i];
    for (Eigen::Index r = 0; r < layer.w.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.w.cols(); ++c) flat[at++] = layer.w(r, c);
    for (Eigen::Index r = 0; r < layer.eta.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.eta.cols(); ++c) flat[at++] = layer.eta(r, c);
  }
  return flat;
}

void ModelParams::unflatten(const RVector& flat) {
  if (flat.size() != parameter_count())
    throw ValidationError("parameter vector has " + std::to_string(flat.size()) +
                          " entries, model expects " + std::to_string(parameter_count()));
  Eigen::Index at = 0;
  for (auto& layer : layers) {
    for (Eigen::Index i = 0; i < layer.w0.size(); ++i) layer.w0[i] = flat[at++];
    for (Eigen::Index r = 0; r < layer.w.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.w.cols(); ++c) layer.w(r, c) = flat[at++];
    for (Eigen::Index r = 0; r < layer.eta.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.eta.cols(); ++c) layer.eta(r, c) = flat[at++];
  }
}

void ModelParams::validate() const {
  const int users = config.num_users;
  if (users < 1) throw ValidationError("model config must have U >= 1");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ValidationError("lambda must be > 0");
  for (std::size_t n = 0; n < layers.size(); ++n) {
    const auto& layer = layers[n];
    if (layer.w0.size() != users + 1 || layer.w.rows() != users || layer.w.cols() != users + 1 ||
        layer.eta.rows() != users || layer.eta.cols() != users + 1)
      throw ValidationError("layer " + std::to_string(n) + " dimensions do not match U=" +
                            std::to_string(users));
    if (!layer.w0.allFinite() || !layer.w.allFinite() || !layer.eta.allFinite())
      throw ValidationError("layer " + std::to_string(n) + " has non-finite parameters");
  }
}

RVector env_vector(const ScenarioConfig& config) {
  RVector env(config.num_users + 1);
  env.head(config.num_users) = config.weights;
  env[config.num_users] = config.p_max_w;
  return env;
}

BeamState init_state(const ChannelSample& sample) {
  const int users = sample.num_users();
  BeamState state = BeamState::zeros(sample.num_antennas(), users);
  state.priv = sample.channels;
  state.common = sample.channels.col(0);
  const double raw = state.transmit_power();
  if (raw > 0.0) {
    const double scale = std::sqrt(0.9 * sample.config.power_budget() / raw);
    state.priv *= scale;
    state.common *= scale;
  }
  return state;
}

BeamState layer_forward(const ChannelSample& sample, const BeamState& state,
                        const LayerParams& layer, double lambda, const RVector& env,
                        double rate_step) {
  check_dimensions(sample, state);
  const int users = sample.num_users();
  if (layer.num_users() != users || env.size() != users + 1)
    throw ValidationError("layer parameters do not match the sample's user count");

  const CMatrix& h = sample.channels;
  const double noise = sample.config.noise_var;
  const auto& weights = sample.config.weights;
  const CMatrix gains = h.adjoint() * state.priv;  // (k, j) = h_k^H v_j

  // Auxiliary variables and Phi at the incoming state.
  CVector z(users);
  RVector phi(users);
  RVector z_abs2(users);
  for (int k = 0; k < users; ++k) {
    const double interference = gains.row(k).squaredNorm() - std::norm(gains(k, k));
    const double denom = noise + interference;
    z[k] = gains(k, k) / denom;
    z_abs2[k] = std::norm(z[k]);
    phi[k] = 1.0 + 2.0 * std::real(std::conj(z[k]) * gains(k, k)) - z_abs2[k] * denom;
  }
  const double common_denom = noise + gains.row(0).squaredNorm();
  const std::complex<double> common_gain = h.col(0).dot(state.common);
  const std::complex<double> z0 = common_gain / common_denom;
  const double phi0 =
      1.0 + 2.0 * std::real(std::conj(z0) * common_gain) - std::norm(z0) * common_denom;
  if (!(phi0 > 0.0) || !(phi.array() > 0.0).all() || !std::isfinite(phi0) || !phi.allFinite())
    throw NumericalError("nonpositive or non-finite Phi in layer forward");

  // Every gradient term is a multiple of some channel column, so the private
  // update is h * coeff with coeff(:, k) collecting user k's weighted terms.
  CMatrix coeff = CMatrix::Zero(users, users);
  for (int k = 0; k < users; ++k) {
    const double step = kLn2 * env.dot(layer.w.row(k).transpose());
    const auto eta = layer.eta.row(k);
    coeff(k, k) += eta[0] * (2.0 * weights[k] * z[k] / kLn2) / phi[k];
    int slot = 1;
    for (int j = 0; j < users; ++j) {
      if (j == k) continue;
      coeff(j, k) += eta[slot++] * (-2.0 * z_abs2[j] * weights[j] * gains(j, k) / kLn2) / phi[j];
    }
    // o_k / lambda
    coeff(0, k) += eta[users] * (-2.0 * std::norm(z0) * gains(0, k) / (phi0 * kLn2));
    coeff.col(k) *= step;
  }

  BeamState moved;
  moved.priv = state.priv + h * coeff;
  // ln2 (env . w0) grad_v0 / lambda = (env . w0) 2 z0 h_0 / Phi_0
  const double common_step = env.dot(layer.w0);
  moved.common = state.common + (common_step * 2.0 * z0 / phi0) * h.col(0);
  moved.common_rate = state.common_rate + rate_step * (weights.array() - lambda).matrix();
  return project(sample, moved, ProjectionMode::always);
}

ForwardTrace forward(const ChannelSample& sample, const ModelParams& model) {
  if (sample.num_users() != model.config.num_users ||
      sample.num_antennas() != model.config.num_antennas)
    throw ValidationError("sample (U=" + std::to_string(sample.num_users()) + ", M=" +
                          std::to_string(sample.num_antennas()) + ") does not match model (U=" +
                          std::to_string(model.config.num_users) + ", M=" +
                          std::to_string(model.config.num_antennas) + ")");
  const int layers = model.num_layers();
  const RVector env = env_vector(sample.config);
  ForwardTrace trace;
  trace.states.reserve(layers + 1);
  trace.wsr.resize(layers + 1);
  trace.violation.resize(layers + 1);
  trace.states.push_back(project(sample, init_state(sample), ProjectionMode::always));
  accumulate_state(sample, trace.states.back(), trace.wsr[0], trace.violation[0]);
  for (int n = 0; n < layers; ++n) {
    trace.states.push_back(layer_forward(sample, trace.states.back(), model.layers[n],
                                         model.lambda, env, model.rate_step));
    accumulate_state(sample, trace.states.back(), trace.wsr[n + 1], trace.violation[n + 1]);
  }
  return trace;
}

double violation_term(const ChannelSample& sample, const BeamState& state) {
  const double over_power =
      state.transmit_power() + sample.config.p_c_w - sample.config.p_max_w;
  double total = std::max(0.0, over_power);
  const RVector s = sinr_all(sample, state);
  for (int k = 0; k < sample.num_users(); ++k)
    total += std::max(0.0, sample.config.qos_sinr[k] - s[k]);
  return total;
}

double violation_factor(std::span<const BeamState> states, std::span<const ChannelSample> samples) {
  if (states.empty() || states.size() != samples.size())
    throw ValidationError("violation_factor needs a nonempty batch with one sample per state");
  double total = 0.0;
  for (std::size_t q = 0; q < states.size(); ++q) total += violation_term(samples[q], states[q]);
  return total / static_cast<double>(states.size());
}

LossTerms loss_terms(std::span<const ForwardTrace> traces) {
  if (traces.empty()) throw ValidationError("loss needs a nonempty batch");
  const int layers = traces.front().num_layers();
  if (layers < 1) throw ValidationError("loss needs at least one layer");
  for (const auto& trace : traces)
    if (trace.num_layers() != layers) throw ValidationError("traces have inconsistent depth");

  const double q = static_cast<double>(traces.size());
  LossTerms terms;
  double weighted_wsr = 0.0;
  double weighted_violation = 0.0;
  for (int n = 1; n <= layers; ++n) {
    const double weight = std::log2(n + 1.0);
    double wsr_sum = 0.0;
    double violation_sum = 0.0;
    for (const auto& trace : traces) {
      wsr_sum += trace.wsr[n];
      violation_sum += trace.violation[n];
    }
    weighted_wsr += weight * wsr_sum;
    weighted_violation += weight * violation_sum / q;  // log2(n+1) Xi^n
    if (n == layers) {
      terms.lpfv = weight * violation_sum / q;
      terms.lwsr = -weight * wsr_sum / q;
    }
  }
  terms.twsr = -weighted_wsr / (q * layers);
  terms.tpfv = weighted_violation / layers;
  terms.loss = terms.twsr + weighted_violation;
  return terms;
}

double loss(std::span<const ForwardTrace> traces) { return loss_terms(traces).loss; }

double batch_loss(const ModelParams& model, std::span<const ChannelSample> batch) {
  if (batch.empty()) throw ValidationError("loss needs a nonempty batch");
  const int layers = model.num_layers();
  if (layers < 1) throw ValidationError("loss needs at least one layer");
  double weighted_wsr = 0.0;
  double weighted_violation = 0.0;
  for (const auto& sample : batch) {
    const RVector env = env_vector(sample.config);
    BeamState state = project(sample, init_state(sample), ProjectionMode::always);
    for (int n = 0; n < layers; ++n) {
      state = layer_forward(sample, state, model.layers[n], model.lambda, env, model.rate_step);
      const double weight = std::log2(n + 2.0);
      weighted_wsr += weight * wsr(sample, state);
      weighted_violation += weight * violation_term(sample, state);
    }
  }
  const double q = static_cast<double>(batch.size());
  return -weighted_wsr / (q * layers) + weighted_violation / q;
}

}  // namespace rsma
