#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rsma/model.hpp"
#include "rsma/pgd.hpp"
#include "rsma/unfold.hpp"

namespace rsma {

/// `label` is whatever wsr_opt the dataset carries (FP benchmark or pgd-solve output).
enum class ReferenceKind { label, pgd_oracle };
std::string to_string(ReferenceKind kind);

struct ReferenceSet {
  std::vector<double> wsr;
  ReferenceKind kind = ReferenceKind::pgd_oracle;
};

/// Reference WSR per sample: dataset labels when every sample carries one (and
/// `prefer_labels`), otherwise the backtracking PGD oracle from init_state.
ReferenceSet reference_wsr(std::span<const ChannelSample> samples, bool prefer_labels = true);

/// WSR of the PGD oracle for one sample.
double oracle_wsr(const ChannelSample& sample);

/// Mean of predicted/reference over samples with a positive reference.
/// Samples with nonpositive reference are skipped and counted in `excluded`.
double asr(std::span<const double> predicted, std::span<const double> reference,
           int* excluded = nullptr);

/// Fraction of violated (sample, constraint) pairs at tol 0. Each sample
/// contributes U QoS constraints and one power constraint; the common-rate
/// constraint holds by construction and is not counted.
double violation_rate(std::span<const BeamState> states, std::span<const ChannelSample> samples);

struct MetricsReport {
  double asr = 0.0;
  double violation_rate = 0.0;
  RVector per_layer_asr;  // length N, ASR of each layer's output
  double tpfv = 0.0;
  double lpfv = 0.0;
  double twsr = 0.0;
  double lwsr = 0.0;
  int n_samples = 0;
  int excluded = 0;
  ReferenceKind reference = ReferenceKind::pgd_oracle;
  std::string violation_counting = "per-constraint";
};

LossTerms loss_decomposition(std::span<const ForwardTrace> traces);

MetricsReport evaluate(const ModelParams& model, std::span<const ChannelSample> samples,
                       const ReferenceSet& reference);

/// MetricsReport as a JSON object.
std::string metrics_json(const MetricsReport& report);

enum class SweepAxis { snr_db, p_max_dbm, qos_shift };
SweepAxis parse_sweep_axis(const std::string& name);
std::string to_string(SweepAxis axis);

struct SweepSpec {
  SweepAxis axis = SweepAxis::snr_db;
  std::vector<double> values;
  ScenarioConfig base;  // training distribution (weights/QoS are redrawn per sample)
  int samples = 100;
  std::uint64_t seed = 1;
};

struct SweepRow {
  double value = 0.0;
  double asr = 0.0;
  double violation_rate = 0.0;
  ReferenceKind reference = ReferenceKind::pgd_oracle;
};

/// The testset drawn at one axis value. snr_db changes channel scaling;
/// p_max_dbm changes only the power budget (channels keep the base scaling);
/// qos_shift adds a constant to every r_k.
std::vector<ChannelSample> sweep_testset(const SweepSpec& spec, double value);

std::vector<SweepRow> ood_sweep(const SweepSpec& spec, const ModelParams& model);

/// CSV: axis,value,asr,violation_rate,reference
std::string sweep_csv(SweepAxis axis, const std::vector<SweepRow>& rows);

struct RuntimeSamples {
  std::vector<double> du_seconds;
  std::vector<double> pgd_seconds;
  std::vector<double> du_wsr;
  std::vector<double> pgd_wsr;
};

struct RuntimeSummary {
  double du_median = 0.0;
  double pgd_median = 0.0;
  double du_variance = 0.0;
  double pgd_variance = 0.0;
};

/// Times one DU forward pass and one PGD-oracle solve per trial on the calling
/// thread. Trial t uses samples[t % samples.size()].
RuntimeSamples runtime_bench(const ModelParams& model, std::span<const ChannelSample> samples,
                             int n_trials);
RuntimeSummary summarize(const RuntimeSamples& samples);

double median(std::vector<double> values);
double variance(std::span<const double> values);

/// CSV: solver,trial,seconds
std::string runtime_csv(const RuntimeSamples& samples);

}  // namespace rsma
