#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Dense>

namespace rsma {

using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

/// dBm -> watts. Only the CLI boundary should need this; everything internal is watts.
double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);

/// Physical and optimization constants of one downlink scenario.
///
/// A single noise variance is shared by all users. QoS thresholds are linear
/// SINR values, not dB.
struct ScenarioConfig {
  int num_users = 3;
  int num_antennas = 12;
  double p_max_w = 1.9952623149688795;  // 33 dBm
  double p_c_w = 1.0;                   // 30 dBm
  double noise_var = 1e-3;
  RVector weights;   // alpha_k, length U
  RVector qos_sinr;  // r_k, length U
  double channel_snr_db = 15.0;

  double power_budget() const { return p_max_w - p_c_w; }

  /// Throws ValidationError naming the offending field.
  void validate() const;
};

/// Default scenario (U=3, M=12, 33/30 dBm, sigma^2 1e-3, 15 dB) with equal weights and no QoS floor.
ScenarioConfig default_scenario(int num_users = 3, int num_antennas = 12);

/// Common beamformer, private beamformers and common-rate split.
struct BeamState {
  CVector common;       // v0, length M
  CMatrix priv;         // M x U, column k is v_k
  RVector common_rate;  // R_k^c, length U

  static BeamState zeros(int num_antennas, int num_users);

  int num_users() const { return static_cast<int>(priv.cols()); }
  int num_antennas() const { return static_cast<int>(priv.rows()); }

  /// Sum of squared norms over the common and all private beams.
  double transmit_power() const;
};

struct BenchmarkLabel {
  double wsr_opt = 0.0;
  std::optional<BeamState> beams;
};

/// One channel realization. Columns of `channels` are h_k, sorted so that
/// column 0 has the smallest squared norm.
struct ChannelSample {
  CMatrix channels;  // M x U
  ScenarioConfig config;
  std::optional<BenchmarkLabel> label;

  int num_users() const { return static_cast<int>(channels.cols()); }
  int num_antennas() const { return static_cast<int>(channels.rows()); }

  /// Checks channel dimensions against the config and the config itself.
  void validate() const;
};

struct FeasibilityReport {
  double power_margin = 0.0;   // P_max - P_c - sum ||v_k||^2
  RVector sinr_margins;        // SINR_k - r_k
  double common_rate_margin = 0.0;  // min_k c_k - sum R_k^c
  double min_common_rate = 0.0;     // min_k R_k^c
  bool feasible = false;
};

/// Per-entry variance of the channel coefficients implied by the config's
/// channel SNR: SNR_lin * sigma^2 / (P_max - P_c).
double channel_entry_variance(const ScenarioConfig& config);

/// Draws i.i.d. CN(0, h^2) channels and sorts users weakest first (alpha_k and
/// r_k move with their channel).
/// Deterministic for a fixed seed.
ChannelSample generate_channels(const ScenarioConfig& config, std::uint64_t seed);

/// Reorders channel columns (and the matching weights/QoS entries) so the
/// weakest user comes first.
void sort_weakest_first(ChannelSample& sample);

/// h_k^H v_j for all k, j (U x U).
CMatrix private_gains(const ChannelSample& sample, const BeamState& state);

double sinr(const ChannelSample& sample, const BeamState& state, int k);
RVector sinr_all(const ChannelSample& sample, const BeamState& state);

/// c_k: rate at which user k can decode the common stream.
RVector common_stream_rates(const ChannelSample& sample, const BeamState& state);

/// min_k c_k over all users (not just the sorted-weakest one).
double common_rate_capacity(const ChannelSample& sample, const BeamState& state);

/// sum_k alpha_k (R_k^c + log2(1 + SINR_k)).
double wsr(const ChannelSample& sample, const BeamState& state);

/// Margins for the power, QoS and common-rate constraints. `feasible` also
/// requires every R_k^c >= -tol.
FeasibilityReport check_feasibility(const ChannelSample& sample, const BeamState& state,
                                    double tol = 1e-9);

/// Throws ValidationError when the state's dimensions do not match the sample.
void check_dimensions(const ChannelSample& sample, const BeamState& state);

}  // namespace rsma
