#include "rsma/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "rsma/errors.hpp"

namespace rsma {

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

void ScenarioConfig::validate() const {
  if (num_users < 1) throw ValidationError("num_users must be >= 1");
  if (num_antennas < 1) throw ValidationError("num_antennas must be >= 1");
  if (!(p_c_w >= 0.0)) throw ValidationError("p_c must be >= 0");
  if (!(p_max_w > p_c_w)) throw ValidationError("p_max must exceed p_c");
  if (!(noise_var > 0.0)) throw ValidationError("sigma2 must be > 0");
  if (weights.size() != num_users)
    throw ValidationError("alpha has " + std::to_string(weights.size()) + " entries, expected " +
                          std::to_string(num_users));
  if (qos_sinr.size() != num_users)
    throw ValidationError("r has " + std::to_string(qos_sinr.size()) + " entries, expected " +
                          std::to_string(num_users));
  for (int k = 0; k < num_users; ++k) {
    if (!(weights[k] > 0.0) || !std::isfinite(weights[k]))
      throw ValidationError("alpha[" + std::to_string(k) + "] must be > 0");
    if (!(qos_sinr[k] >= 0.0) || !std::isfinite(qos_sinr[k]))
      throw ValidationError("r[" + std::to_string(k) + "] must be >= 0");
  }
  if (!std::isfinite(channel_snr_db)) throw ValidationError("snr_db must be finite");
}

ScenarioConfig default_scenario(int num_users, int num_antennas) {
  ScenarioConfig config;
  config.num_users = num_users;
  config.num_antennas = num_antennas;
  config.weights = RVector::Constant(num_users, 1.0 / num_users);
  config.qos_sinr = RVector::Zero(num_users);
  return config;
}

BeamState BeamState::zeros(int num_antennas, int num_users) {
  BeamState state;
  state.common = CVector::Zero(num_antennas);
  state.priv = CMatrix::Zero(num_antennas, num_users);
  state.common_rate = RVector::Zero(num_users);
  return state;
}

double BeamState::transmit_power() const { return common.squaredNorm() + priv.squaredNorm(); }

void ChannelSample::validate() const {
  config.validate();
  if (channels.cols() != config.num_users)
    throw ValidationError("channels have " + std::to_string(channels.cols()) +
                          " users, config says " + std::to_string(config.num_users));
  if (channels.rows() != config.num_antennas)
    throw ValidationError("channels have " + std::to_string(channels.rows()) +
                          " antennas, config says " + std::to_string(config.num_antennas));
  if (!channels.allFinite()) throw ValidationError("channels contain non-finite entries");
}

double channel_entry_variance(const ScenarioConfig& config) {
  const double snr_lin = std::pow(10.0, config.channel_snr_db / 10.0);
  return snr_lin * config.noise_var / config.power_budget();
}

void sort_weakest_first(ChannelSample& sample) {
  const int users = sample.num_users();
  std::vector<int> order(users);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return sample.channels.col(a).squaredNorm() < sample.channels.col(b).squaredNorm();
  });
  CMatrix sorted(sample.channels.rows(), users);
  RVector weights(users);
  RVector qos(users);
  for (int k = 0; k < users; ++k) {
    sorted.col(k) = sample.channels.col(order[k]);
    weights[k] = sample.config.weights[order[k]];
    qos[k] = sample.config.qos_sinr[order[k]];
  }
  sample.channels = std::move(sorted);
  sample.config.weights = std::move(weights);
  sample.config.qos_sinr = std::move(qos);
}

ChannelSample generate_channels(const ScenarioConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  // CN(0, h^2): real and imaginary parts each carry half the variance.
  std::normal_distribution<double> normal(0.0, std::sqrt(channel_entry_variance(config) / 2.0));

  ChannelSample sample;
  sample.config = config;
  sample.channels.resize(config.num_antennas, config.num_users);
  for (int k = 0; k < config.num_users; ++k) {
    for (int m = 0; m < config.num_antennas; ++m) {
      const double re = normal(rng);
      const double im = normal(rng);
      sample.channels(m, k) = {re, im};
    }
  }
  sort_weakest_first(sample);
  return sample;
}

void check_dimensions(const ChannelSample& sample, const BeamState& state) {
  const int users = sample.num_users();
  const int antennas = sample.num_antennas();
  if (state.common.size() != antennas || state.priv.rows() != antennas ||
      state.priv.cols() != users || state.common_rate.size() != users) {
    throw ValidationError("beam state dimensions do not match sample (U=" + std::to_string(users) +
                          ", M=" + std::to_string(antennas) + ")");
  }
}

CMatrix private_gains(const ChannelSample& sample, const BeamState& state) {
  return sample.channels.adjoint() * state.priv;
}

namespace {

RVector sinr_from_gains(const CMatrix& gains, double noise_var) {
  const int users = static_cast<int>(gains.rows());
  RVector out(users);
  for (int k = 0; k < users; ++k) {
    const double total = gains.row(k).squaredNorm();
    const double signal = std::norm(gains(k, k));
    out[k] = signal / (noise_var + (total - signal));
  }
  return out;
}

}  // namespace

double sinr(const ChannelSample& sample, const BeamState& state, int k) {
  check_dimensions(sample, state);
  if (k < 0 || k >= sample.num_users())
    throw ValidationError("user index " + std::to_string(k) + " out of range");
  const CVector row = sample.channels.col(k).adjoint() * state.priv;
  const double signal = std::norm(row[k]);
  double interference = 0.0;
  for (int j = 0; j < row.size(); ++j)
    if (j != k) interference += std::norm(row[j]);
  return signal / (sample.config.noise_var + interference);
}

RVector sinr_all(const ChannelSample& sample, const BeamState& state) {
  check_dimensions(sample, state);
  return sinr_from_gains(private_gains(sample, state), sample.config.noise_var);
}

RVector common_stream_rates(const ChannelSample& sample, const BeamState& state) {
  check_dimensions(sample, state);
  const CMatrix gains = private_gains(sample, state);
  const CVector common = sample.channels.adjoint() * state.common;
  const int users = sample.num_users();
  RVector rates(users);
  for (int k = 0; k < users; ++k) {
    const double denom = sample.config.noise_var + gains.row(k).squaredNorm();
    rates[k] = std::log2(1.0 + std::norm(common[k]) / denom);
  }
  return rates;
}

double common_rate_capacity(const ChannelSample& sample, const BeamState& state) {
  return common_stream_rates(sample, state).minCoeff();
}

double wsr(const ChannelSample& sample, const BeamState& state) {
  const RVector s = sinr_all(sample, state);
  double total = 0.0;
  for (int k = 0; k < s.size(); ++k)
    total += sample.config.weights[k] * (state.common_rate[k] + std::log2(1.0 + s[k]));
  return total;
}

FeasibilityReport check_feasibility(const ChannelSample& sample, const BeamState& state,
                                    double tol) {
  if (!(tol >= 0.0)) throw ValidationError("tol must be >= 0");
  FeasibilityReport report;
  report.power_margin = sample.config.power_budget() - state.transmit_power();
  report.sinr_margins = sinr_all(sample, state) - sample.config.qos_sinr;
  report.common_rate_margin = common_rate_capacity(sample, state) - state.common_rate.sum();
  report.min_common_rate = state.common_rate.minCoeff();
  report.feasible = report.power_margin >= -tol && report.sinr_margins.minCoeff() >= -tol &&
                    report.common_rate_margin >= -tol && report.min_common_rate >= -tol;
  return report;
}

}  // namespace rsma
