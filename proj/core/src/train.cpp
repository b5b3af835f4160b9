#include "rsma/train.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "rsma/errors.hpp"
#include "rsma/eval.hpp"

namespace rsma {

GradMethod parse_grad_method(const std::string& name) {
  if (name == "central_fd" || name == "fd") return GradMethod::central_fd;
  if (name == "adjoint") return GradMethod::adjoint;
  throw ValidationError("unknown grad method '" + name + "' (expected central_fd or adjoint)");
}

std::string to_string(GradMethod method) {
  return method == GradMethod::central_fd ? "central_fd" : "adjoint";
}

void TrainConfig::validate() const {
  if (epochs < 0) throw ValidationError("epochs must be >= 0");
  if (batch_size < 1) throw ValidationError("batch must be >= 1");
  if (!(lr >= 0.0)) throw ValidationError("lr must be >= 0");
  if (layers < 1) throw ValidationError("layers must be >= 1");
  if (lambda && !(*lambda > 0.0)) throw ValidationError("lambda must be > 0");
  if (!(fd_step > 0.0)) throw ValidationError("fd step must be > 0");
  if (threads < 1) throw ValidationError("threads must be >= 1");
  if (grad_method == GradMethod::adjoint)
    throw ValidationError("grad method 'adjoint' is not available in this build; use central_fd");
}

ModelParams init_model(const ScenarioConfig& snapshot, int layers, double lambda,
                       std::uint64_t seed) {
  if (layers < 0) throw ValidationError("layers must be >= 0");
  const int users = snapshot.num_users;
  const double p_max = snapshot.p_max_w;
  constexpr double kInitialStep = 0.01;

  ModelParams model;
  model.config = snapshot;
  model.lambda = lambda;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-0.01 / p_max, 0.01 / p_max);
  for (int n = 0; n < layers; ++n) {
    LayerParams layer = LayerParams::zeros(users);
    for (Eigen::Index i = 0; i < layer.w0.size(); ++i) layer.w0[i] = jitter(rng);
    for (Eigen::Index r = 0; r < layer.w.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.w.cols(); ++c) layer.w(r, c) = jitter(rng);
    // ln2 (env . w0) / lambda = step and ln2 (env . w_k) = step at the P_max slot.
    layer.w0[users] += kInitialStep * lambda / (std::numbers::ln2 * p_max);
    layer.w.col(users).array() += kInitialStep / (std::numbers::ln2 * p_max);
    layer.eta.setOnes();
    layer.eta.col(users).setConstant(lambda);
    model.layers.push_back(std::move(layer));
  }
  return model;
}

std::string describe_parameter(const ModelParams& model, int index) {
  const int users = model.config.num_users;
  const int per_layer = LayerParams::parameter_count(users);
  if (index < 0 || index >= model.parameter_count()) return "parameter " + std::to_string(index);
  const int layer = index / per_layer;
  int offset = index % per_layer;
  std::ostringstream out;
  out << "layer " << layer + 1 << ' ';
  if (offset < users + 1) {
    out << "w0[" << offset << ']';
    return out.str();
  }
  offset -= users + 1;
  const int block = users * (users + 1);
  const char* name = offset < block ? "w" : "eta";
  offset %= block;
  out << name << '[' << offset / (users + 1) << "][" << offset % (users + 1) << ']';
  return out.str();
}

namespace {

double safe_loss(const ModelParams& model, std::span<const ChannelSample> batch) {
  try {
    const double value = batch_loss(model, batch);
    return std::isfinite(value) ? value : INFINITY;
  } catch (const NumericalError&) {
    return INFINITY;
  }
}

double probe_entry(const ModelParams& model, const RVector& theta, Eigen::Index i,
                   std::span<const ChannelSample> batch, double fd_step, double& base) {
  ModelParams probe = model;
  RVector shifted = theta;
  const double h = fd_step * std::max(std::abs(theta[i]), 1e-2);
  shifted[i] = theta[i] + h;
  probe.unflatten(shifted);
  const double plus = safe_loss(probe, batch);
  shifted[i] = theta[i] - h;
  probe.unflatten(shifted);
  const double minus = safe_loss(probe, batch);

  if (std::isfinite(plus) && std::isfinite(minus)) return (plus - minus) / (2.0 * h);
  if (std::isnan(base)) base = safe_loss(model, batch);
  if (!std::isfinite(base)) throw NumericalError("non-finite loss at the current parameters");
  if (std::isfinite(plus)) return (plus - base) / h;
  if (std::isfinite(minus)) return (base - minus) / h;
  throw NumericalError("non-finite loss on both sides of " +
                       describe_parameter(model, static_cast<int>(i)));
}

RVector central_difference(const ModelParams& model, std::span<const ChannelSample> batch,
                           double fd_step, int threads) {
  const RVector theta = model.flatten();
  const Eigen::Index count = theta.size();
  RVector grad(count);
  const int workers = static_cast<int>(std::min<Eigen::Index>(threads, count));
  if (workers <= 1) {
    double base = NAN;
    for (Eigen::Index i = 0; i < count; ++i) grad[i] = probe_entry(model, theta, i, batch, fd_step, base);
    return grad;
  }

  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      double base = NAN;
      try {
        for (Eigen::Index i = w; i < count; i += workers)
          grad[i] = probe_entry(model, theta, i, batch, fd_step, base);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return grad;
}

}  // namespace

RVector param_gradient(const ModelParams& model, std::span<const ChannelSample> batch,
                       GradMethod method, double fd_step, int threads) {
  if (batch.empty()) throw ValidationError("param_gradient needs a nonempty batch");
  model.validate();
  // TODO: reverse-mode gradient through layer_forward and project_powers; FD costs
  // 2 forward passes per parameter and dominates training time.
  if (method == GradMethod::adjoint)
    throw ValidationError("grad method 'adjoint' is not available in this build; use central_fd");
  return central_difference(model, batch, fd_step, threads);
}

AdamOptimizer::AdamOptimizer(Eigen::Index size, double lr, double beta1, double beta2,
                             double epsilon)
    : first_(RVector::Zero(size)),
      second_(RVector::Zero(size)),
      lr_(lr),
      beta1_(beta1),
      beta2_(beta2),
      epsilon_(epsilon) {}

void AdamOptimizer::step(RVector& params, const RVector& grad) {
  ++steps_;
  first_ = beta1_ * first_ + (1.0 - beta1_) * grad;
  second_ = beta2_ * second_ + (1.0 - beta2_) * grad.cwiseAbs2();
  const double correction1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
  const double correction2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    const double m_hat = first_[i] / correction1;
    const double v_hat = second_[i] / correction2;
    params[i] -= lr_ * m_hat / (std::sqrt(v_hat) + epsilon_);
  }
}

namespace {

EpochRecord measure_epoch(int epoch, const ModelParams& model,
                          std::span<const ChannelSample> dataset,
                          std::span<const double> reference, bool track_asr) {
  std::vector<ForwardTrace> traces;
  traces.reserve(dataset.size());
  for (const auto& sample : dataset) traces.push_back(forward(sample, model));
  const LossTerms terms = loss_terms(traces);
  EpochRecord record;
  record.epoch = epoch;
  record.loss = terms.loss;
  record.twsr = terms.twsr;
  record.lwsr = terms.lwsr;
  record.tpfv = terms.tpfv;
  record.lpfv = terms.lpfv;
  if (track_asr) {
    std::vector<BeamState> finals;
    std::vector<double> predicted;
    finals.reserve(traces.size());
    predicted.reserve(traces.size());
    for (const auto& trace : traces) {
      finals.push_back(trace.states.back());
      predicted.push_back(trace.wsr[trace.num_layers()]);
    }
    if (!reference.empty()) record.train_asr = asr(predicted, reference);
    record.train_violation_rate = violation_rate(finals, dataset);
  }
  return record;
}

}  // namespace

TrainResult train(std::span<const ChannelSample> dataset, const TrainConfig& config,
                  std::span<const double> reference_wsr, const EpochCallback& on_epoch) {
  config.validate();
  if (dataset.empty()) throw ValidationError("training set is empty");
  double max_alpha = 0.0;
  for (const auto& sample : dataset) max_alpha = std::max(max_alpha, sample.config.weights.maxCoeff());
  const double lambda = config.lambda.value_or(2.0 * max_alpha);
  if (!(lambda > max_alpha))
    throw ValidationError("lambda must exceed the largest alpha in the training set");
  return train_from(init_model(dataset.front().config, config.layers, lambda, config.seed),
                    dataset, config, reference_wsr, on_epoch);
}

TrainResult train_from(ModelParams model, std::span<const ChannelSample> dataset,
                       const TrainConfig& config, std::span<const double> reference_wsr,
                       const EpochCallback& on_epoch) {
  config.validate();
  model.validate();
  if (dataset.empty()) throw ValidationError("training set is empty");
  for (const auto& sample : dataset)
    if (sample.num_users() != model.config.num_users ||
        sample.num_antennas() != model.config.num_antennas)
      throw ValidationError("training sample dimensions do not match the model");

  std::vector<double> labels;
  std::span<const double> reference = reference_wsr;
  if (reference.empty() &&
      std::all_of(dataset.begin(), dataset.end(), [](const auto& s) { return s.label.has_value(); })) {
    for (const auto& sample : dataset) labels.push_back(sample.label->wsr_opt);
    reference = labels;
  }
  if (!reference.empty() && reference.size() != dataset.size())
    throw ValidationError("one reference WSR per training sample required");

  TrainResult result;
  result.model = model;
  result.history.push_back(measure_epoch(0, model, dataset, reference, config.track_asr));
  if (on_epoch) on_epoch(result.history.back());

  RVector theta = model.flatten();
  AdamOptimizer optimizer(theta.size(), config.lr, config.beta1, config.beta2, config.epsilon);
  std::mt19937_64 rng(config.seed ^ 0x5deece66dULL);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<ChannelSample> batch;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) batch.push_back(dataset[order[i]]);
      RVector grad;
      try {
        grad = param_gradient(model, batch, config.grad_method, config.fd_step, config.threads);
      } catch (const NumericalError& e) {
        result.diverged = true;
        result.message = "epoch " + std::to_string(epoch) + ": " + e.what();
        return result;
      }
      if (!grad.allFinite()) {
        result.diverged = true;
        result.message = "epoch " + std::to_string(epoch) + ": non-finite gradient";
        return result;
      }
      optimizer.step(theta, grad);
      model.unflatten(theta);
    }
    EpochRecord record;
    try {
      record = measure_epoch(epoch, model, dataset, reference, config.track_asr);
    } catch (const NumericalError& e) {
      result.diverged = true;
      result.message = "epoch " + std::to_string(epoch) + ": " + e.what();
      return result;
    }
    if (!std::isfinite(record.loss)) {
      result.diverged = true;
      result.message = "epoch " + std::to_string(epoch) + ": non-finite loss";
      return result;
    }
    result.model = model;
    result.history.push_back(record);
    if (on_epoch) on_epoch(record);
  }
  return result;
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::ostringstream out;
  out.precision(10);
  out << "epoch,loss,twsr,lwsr,tpfv,lpfv,train_asr,train_violation_rate\n";
  for (const auto& r : history)
    out << r.epoch << ',' << r.loss << ',' << r.twsr << ',' << r.lwsr << ',' << r.tpfv << ','
        << r.lpfv << ',' << r.train_asr << ',' << r.train_violation_rate << '\n';
  return out.str();
}

}  // namespace rsma
