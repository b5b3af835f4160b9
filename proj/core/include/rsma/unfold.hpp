#pragma once

#include <span>
#include <vector>

#include "rsma/model.hpp"

namespace rsma {

/// Learnable parameters of one unfolded layer.
///
/// The private-beam update of user k scales the gradient terms
///   [zeta_k/Phi_k, beta_{j,k}/Phi_j (j != k ascending), o_k/lambda]
/// by row k of `eta` and the whole sum by ln2 * (env . w_k).
struct LayerParams {
  RVector w0;   // U+1
  RMatrix w;    // U x (U+1), row k is w_k
  RMatrix eta;  // U x (U+1), row k is [eta_k, eta^(j) for j != k, eta_k^p]

  static LayerParams zeros(int num_users);
  int num_users() const { return static_cast<int>(w.rows()); }
  /// (U+1)(2U+1)
  static int parameter_count(int num_users) { return (num_users + 1) * (2 * num_users + 1); }
};

struct ModelParams {
  std::vector<LayerParams> layers;
  double lambda = 2.0;
  double rate_step = 0.05;  // fixed l_1 for the R^c gradient step; not learned
  ScenarioConfig config;    // U and M the model was built for

  int num_layers() const { return static_cast<int>(layers.size()); }
  int parameter_count() const {
    return num_layers() * LayerParams::parameter_count(config.num_users);
  }

  /// Layer-major flattening: w0, then w row-major, then eta row-major.
  RVector flatten() const;
  void unflatten(const RVector& flat);
  void validate() const;
};

/// [alpha_1, ..., alpha_U, P_max (watts)].
RVector env_vector(const ScenarioConfig& config);

/// One layer's states and loss contributions for a single sample.
struct ForwardTrace {
  std::vector<BeamState> states;  // N+1: projected init, then each layer output
  RVector wsr;                    // N+1, WSR of each state
  RVector violation;              // N+1, this sample's violation-factor term per state

  int num_layers() const { return static_cast<int>(wsr.size()) - 1; }
};

/// Conjugate (matched-filter) beamforming: v_k = c h_k, so h_k^H v_k = c ||h_k||^2,
/// and v0 = c h_0, with c chosen so the total power is
/// 0.9 (P_max - P_c). R^c = 0.
BeamState init_state(const ChannelSample& sample);

BeamState layer_forward(const ChannelSample& sample, const BeamState& state,
                        const LayerParams& layer, double lambda, const RVector& env,
                        double rate_step = 0.05);

ForwardTrace forward(const ChannelSample& sample, const ModelParams& model);

/// Per-sample term of the violation factor:
/// relu(sum ||v||^2 + P_c - P_max) + sum_k relu(r_k - SINR_k).
double violation_term(const ChannelSample& sample, const BeamState& state);

/// Mean of violation_term over a nonempty batch.
double violation_factor(std::span<const BeamState> states, std::span<const ChannelSample> samples);

struct LossTerms {
  double loss = 0.0;
  double tpfv = 0.0;  // (1/N) sum_n log2(n+1) Xi^n
  double lpfv = 0.0;  // log2(N+1) Xi^N
  double twsr = 0.0;  // -(1/QN) sum_q sum_n log2(n+1) WSR_{q,n}
  double lwsr = 0.0;  // -(1/Q) sum_q log2(N+1) WSR_{q,N}
};

/// Training loss and its decomposition over a batch of traces with equal N >= 1.
LossTerms loss_terms(std::span<const ForwardTrace> traces);
double loss(std::span<const ForwardTrace> traces);

/// Loss of the model over a batch without keeping intermediate states.
double batch_loss(const ModelParams& model, std::span<const ChannelSample> batch);

}  // namespace rsma
