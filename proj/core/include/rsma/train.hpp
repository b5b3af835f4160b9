#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rsma/model.hpp"
#include "rsma/unfold.hpp"

namespace rsma {

enum class GradMethod { central_fd, adjoint };

GradMethod parse_grad_method(const std::string& name);
std::string to_string(GradMethod method);

struct TrainConfig {
  int epochs = 1600;
  int batch_size = 200;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  int layers = 4;
  std::optional<double> lambda;  // default: 2 * max alpha over the training set
  GradMethod grad_method = GradMethod::central_fd;
  double fd_step = 1e-4;         // relative central-difference step
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  bool track_asr = true;         // compute train_asr / violation rate each epoch
  int threads = 1;               // FD probes evaluated concurrently across parameters

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;  // 0 is the untrained model
  double loss = 0.0;
  double twsr = 0.0;
  double lwsr = 0.0;
  double tpfv = 0.0;
  double lpfv = 0.0;
  double train_asr = 0.0;
  double train_violation_rate = 0.0;
};

struct TrainResult {
  ModelParams model;
  std::vector<EpochRecord> history;
  bool diverged = false;
  std::string message;
};

/// Model initialized near plain PGD: the last entry of each w (the P_max slot)
/// is set so the initial step is 0.01 at the snapshot's P_max, plus
/// uniform(-0.01/P_max, 0.01/P_max) jitter on every w entry; eta entries are 1
/// except eta_k^p = lambda, which reproduces the penalty term's weight.
ModelParams init_model(const ScenarioConfig& snapshot, int layers, double lambda,
                       std::uint64_t seed);

/// Gradient of batch_loss with respect to model.flatten(). central_fd uses
/// step fd_step * max(|theta_i|, 1e-2); a probe that hits a non-finite loss falls
/// back to a one-sided difference. adjoint is reserved and rejected.
/// Results do not depend on `threads`.
RVector param_gradient(const ModelParams& model, std::span<const ChannelSample> batch,
                       GradMethod method, double fd_step = 1e-4, int threads = 1);

/// Human-readable name of flat parameter i, e.g. "layer 2 eta[1][3]".
std::string describe_parameter(const ModelParams& model, int index);

/// Adaptive-moment optimizer state over a flat parameter vector.
class AdamOptimizer {
 public:
  AdamOptimizer(Eigen::Index size, double lr, double beta1, double beta2, double epsilon);
  void step(RVector& params, const RVector& grad);

 private:
  RVector first_;
  RVector second_;
  double lr_;
  double beta1_;
  double beta2_;
  double epsilon_;
  long steps_ = 0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mini-batch training over shuffled data. `reference_wsr` (one per sample)
/// feeds train_asr; pass empty to use FP labels or, failing that, skip ASR
/// tracking. Deterministic for a fixed seed.
TrainResult train(std::span<const ChannelSample> dataset, const TrainConfig& config,
                  std::span<const double> reference_wsr = {},
                  const EpochCallback& on_epoch = {});

/// Resumes from an existing model instead of a fresh init.
TrainResult train_from(ModelParams model, std::span<const ChannelSample> dataset,
                       const TrainConfig& config, std::span<const double> reference_wsr = {},
                       const EpochCallback& on_epoch = {});

/// CSV: epoch,loss,twsr,lwsr,tpfv,lpfv,train_asr,train_violation_rate
std::string history_csv(const std::vector<EpochRecord>& history);

}  // namespace rsma
