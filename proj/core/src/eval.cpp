#include "rsma/eval.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rsma/dataset.hpp"
#include "rsma/errors.hpp"

namespace rsma {

std::string to_string(ReferenceKind kind) {
  return kind == ReferenceKind::label ? "label" : "pgd_oracle";
}

double oracle_wsr(const ChannelSample& sample) {
  const PgdResult result = pgd_solve(sample, oracle_pgd_config(sample.config), init_state(sample));
  return result.best_wsr;
}

ReferenceSet reference_wsr(std::span<const ChannelSample> samples, bool prefer_labels) {
  ReferenceSet out;
  const bool all_labeled = !samples.empty() && std::all_of(samples.begin(), samples.end(),
                                                           [](const auto& s) { return s.label.has_value(); });
  out.wsr.reserve(samples.size());
  if (prefer_labels && all_labeled) {
    out.kind = ReferenceKind::label;
    for (const auto& sample : samples) out.wsr.push_back(sample.label->wsr_opt);
  } else {
    out.kind = ReferenceKind::pgd_oracle;
    for (const auto& sample : samples) out.wsr.push_back(oracle_wsr(sample));
  }
  return out;
}

double asr(std::span<const double> predicted, std::span<const double> reference, int* excluded) {
  if (predicted.size() != reference.size())
    throw ValidationError("asr: predicted and reference lengths differ");
  double total = 0.0;
  int used = 0;
  int skipped = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (!(reference[i] > 0.0)) {
      ++skipped;
      continue;
    }
    total += predicted[i] / reference[i];
    ++used;
  }
  if (excluded) *excluded = skipped;
  return used > 0 ? total / used : 0.0;
}

double violation_rate(std::span<const BeamState> states, std::span<const ChannelSample> samples) {
  if (states.empty() || states.size() != samples.size())
    throw ValidationError("violation_rate needs a nonempty batch with one sample per state");
  long violated = 0;
  long total = 0;
  for (std::size_t q = 0; q < states.size(); ++q) {
    const FeasibilityReport report = check_feasibility(samples[q], states[q], 0.0);
    violated += report.power_margin < 0.0 ? 1 : 0;
    for (Eigen::Index k = 0; k < report.sinr_margins.size(); ++k)
      violated += report.sinr_margins[k] < 0.0 ? 1 : 0;
    total += 1 + report.sinr_margins.size();
  }
  return static_cast<double>(violated) / static_cast<double>(total);
}

LossTerms loss_decomposition(std::span<const ForwardTrace> traces) { return loss_terms(traces); }

MetricsReport evaluate(const ModelParams& model, std::span<const ChannelSample> samples,
                       const ReferenceSet& reference) {
  if (samples.empty()) throw ValidationError("evaluate needs at least one sample");
  if (reference.wsr.size() != samples.size())
    throw ValidationError("evaluate: one reference WSR per sample required");
  std::vector<ForwardTrace> traces;
  traces.reserve(samples.size());
  for (const auto& sample : samples) traces.push_back(forward(sample, model));

  const int layers = model.num_layers();
  MetricsReport report;
  report.n_samples = static_cast<int>(samples.size());
  report.reference = reference.kind;
  report.per_layer_asr.resize(layers);
  std::vector<double> predicted(samples.size());
  for (int n = 0; n <= layers; ++n) {
    for (std::size_t q = 0; q < traces.size(); ++q) predicted[q] = traces[q].wsr[n];
    int excluded = 0;
    const double value = asr(predicted, reference.wsr, &excluded);
    if (n > 0) report.per_layer_asr[n - 1] = value;
    if (n == layers) {
      report.asr = value;
      report.excluded = excluded;
    }
  }
  std::vector<BeamState> finals;
  finals.reserve(traces.size());
  for (const auto& trace : traces) finals.push_back(trace.states.back());
  report.violation_rate = violation_rate(finals, samples);
  if (layers > 0) {
    const LossTerms terms = loss_terms(traces);
    report.tpfv = terms.tpfv;
    report.lpfv = terms.lpfv;
    report.twsr = terms.twsr;
    report.lwsr = terms.lwsr;
  }
  return report;
}

std::string metrics_json(const MetricsReport& report) {
  nlohmann::json j;
  j["asr"] = report.asr;
  j["violation_rate"] = report.violation_rate;
  j["per_layer_asr"] = std::vector<double>(report.per_layer_asr.data(),
                                           report.per_layer_asr.data() + report.per_layer_asr.size());
  j["tpfv"] = report.tpfv;
  j["lpfv"] = report.lpfv;
  j["twsr"] = report.twsr;
  j["lwsr"] = report.lwsr;
  j["n_samples"] = report.n_samples;
  j["excluded"] = report.excluded;
  j["reference"] = to_string(report.reference);
  j["violation_counting"] = report.violation_counting;
  return j.dump(2);
}

SweepAxis parse_sweep_axis(const std::string& name) {
  if (name == "snr_db" || name == "snr-db" || name == "snr") return SweepAxis::snr_db;
  if (name == "p_max_dbm" || name == "p-max-dbm" || name == "p_max") return SweepAxis::p_max_dbm;
  if (name == "qos_shift" || name == "qos-shift" || name == "qos") return SweepAxis::qos_shift;
  throw ValidationError("unknown sweep axis '" + name + "' (expected snr_db, p_max_dbm, qos_shift)");
}

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::snr_db: return "snr_db";
    case SweepAxis::p_max_dbm: return "p_max_dbm";
    case SweepAxis::qos_shift: return "qos_shift";
  }
  return "unknown";
}

std::vector<ChannelSample> sweep_testset(const SweepSpec& spec, double value) {
  ScenarioConfig config = spec.base;
  switch (spec.axis) {
    case SweepAxis::snr_db:
      config.channel_snr_db = value;
      return generate_dataset(config, spec.samples, spec.seed);
    case SweepAxis::qos_shift:
      return generate_dataset(config, spec.samples, spec.seed, value);
    case SweepAxis::p_max_dbm: {
      std::vector<ChannelSample> samples = generate_dataset(config, spec.samples, spec.seed);
      const double p_max = dbm_to_watts(value);
      for (auto& sample : samples) {
        sample.config.p_max_w = p_max;
        sample.config.validate();
      }
      return samples;
    }
  }
  throw ValidationError("unknown sweep axis");
}

std::vector<SweepRow> ood_sweep(const SweepSpec& spec, const ModelParams& model) {
  if (spec.values.empty()) throw ValidationError("sweep needs at least one axis value");
  std::vector<SweepRow> rows;
  for (double value : spec.values) {
    const std::vector<ChannelSample> testset = sweep_testset(spec, value);
    const ReferenceSet reference = reference_wsr(testset);
    const MetricsReport report = evaluate(model, testset, reference);
    rows.push_back({value, report.asr, report.violation_rate, report.reference});
  }
  return rows;
}

std::string sweep_csv(SweepAxis axis, const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out.precision(10);
  out << "axis,value,asr,violation_rate,reference\n";
  for (const auto& row : rows)
    out << to_string(axis) << ',' << row.value << ',' << row.asr << ',' << row.violation_rate
        << ',' << to_string(row.reference) << '\n';
  return out.str();
}

RuntimeSamples runtime_bench(const ModelParams& model, std::span<const ChannelSample> samples,
                             int n_trials) {
  if (samples.empty()) throw ValidationError("runtime_bench needs at least one sample");
  if (n_trials < 1) throw ValidationError("trials must be >= 1");
  using clock = std::chrono::steady_clock;
  RuntimeSamples out;
  out.du_seconds.reserve(n_trials);
  out.pgd_seconds.reserve(n_trials);
  for (int t = 0; t < n_trials; ++t) {
    const ChannelSample& sample = samples[static_cast<std::size_t>(t) % samples.size()];

    auto start = clock::now();
    const ForwardTrace trace = forward(sample, model);
    auto stop = clock::now();
    out.du_seconds.push_back(std::chrono::duration<double>(stop - start).count());
    out.du_wsr.push_back(trace.wsr[trace.num_layers()]);

    start = clock::now();
    const PgdResult result =
        pgd_solve(sample, oracle_pgd_config(sample.config), init_state(sample));
    stop = clock::now();
    out.pgd_seconds.push_back(std::chrono::duration<double>(stop - start).count());
    out.pgd_wsr.push_back(result.best_wsr);
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  if (values.size() % 2 == 1) return values[mid];
  const double upper = values[mid];
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

double variance(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
  double total = 0.0;
  for (double v : values) total += (v - mean) * (v - mean);
  return total / static_cast<double>(values.size() - 1);
}

RuntimeSummary summarize(const RuntimeSamples& samples) {
  RuntimeSummary summary;
  summary.du_median = median(samples.du_seconds);
  summary.pgd_median = median(samples.pgd_seconds);
  summary.du_variance = variance(samples.du_seconds);
  summary.pgd_variance = variance(samples.pgd_seconds);
  return summary;
}

std::string runtime_csv(const RuntimeSamples& samples) {
  std::ostringstream out;
  out.precision(10);
  out << "solver,trial,seconds\n";
  for (std::size_t t = 0; t < samples.du_seconds.size(); ++t)
    out << "du," << t << ',' << samples.du_seconds[t] << '\n';
  for (std::size_t t = 0; t < samples.pgd_seconds.size(); ++t)
    out << "pgd," << t << ',' << samples.pgd_seconds[t] << '\n';
  return out.str();
}

}  // namespace rsma
