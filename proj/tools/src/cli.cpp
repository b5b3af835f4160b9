#include "rsma_cli/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rsma/checkpoint.hpp"
#include "rsma/dataset.hpp"
#include "rsma/errors.hpp"
#include "rsma/eval.hpp"
#include "rsma/pgd.hpp"
#include "rsma/train.hpp"

namespace rsma::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int resolve_threads(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("RSMA_UNFOLD_THREADS")) {
    char* end = nullptr;
    const long parsed = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && parsed > 0) return static_cast<int>(parsed);
    throw ValidationError(std::string("RSMA_UNFOLD_THREADS must be a positive integer, got '") +
                          env + "'");
  }
  return 1;
}

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

json scenario_json(const ScenarioConfig& c) {
  return {{"users", c.num_users},     {"antennas", c.num_antennas}, {"p_max_w", c.p_max_w},
          {"p_c_w", c.p_c_w},         {"sigma2", c.noise_var},      {"snr_db", c.channel_snr_db}};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  out << text;
}

/// Manifest for a run. Written before any computation starts.
struct Manifest {
  json body;

  Manifest(const std::string& command, const std::vector<std::string>& args) {
    body["command"] = command;
    body["argv"] = args;
    body["code_version"] = RSMA_VERSION;
    body["timestamp"] = utc_timestamp();
    body["config"] = json::object();
    body["inputs"] = json::object();
    body["outputs"] = json::object();
  }

  void write(const fs::path& path) const { write_text(path, body.dump(2) + "\n"); }
};

fs::path prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw ValidationError("--out: cannot create directory '" + dir.string() + "'");
  return dir;
}

/// Dataset outputs are single files; their manifest sits beside them.
fs::path manifest_beside(const fs::path& file) {
  if (file.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(file.parent_path(), ec);
  }
  fs::path manifest = file;
  manifest.replace_extension(".manifest.json");
  return manifest;
}

void require_file(const std::string& flag, const fs::path& path) {
  if (!fs::is_regular_file(path))
    throw ValidationError(flag + ": no such file '" + path.string() + "'");
}

std::vector<ChannelSample> load_data(const fs::path& path) {
  require_file("--data", path);
  std::vector<ChannelSample> samples = read_dataset(path);
  if (samples.empty()) throw ValidationError("--data: '" + path.string() + "' has no samples");
  return samples;
}

void check_model_matches(const ModelParams& model, std::span<const ChannelSample> samples) {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].num_users() != model.config.num_users ||
        samples[i].num_antennas() != model.config.num_antennas) {
      std::ostringstream msg;
      msg << "sample " << i + 1 << " has users=" << samples[i].num_users()
          << " antennas=" << samples[i].num_antennas() << " but the model expects users="
          << model.config.num_users << " antennas=" << model.config.num_antennas;
      throw ValidationError(msg.str());
    }
  }
}

struct GenDataOptions {
  int users = 3;
  int antennas = 12;
  int samples = 300;
  double snr_db = 15.0;
  double p_max_dbm = 33.0;
  double p_c_dbm = 30.0;
  double sigma2 = 1e-3;
  double qos_shift = 0.0;
  std::uint64_t seed = 7;
  std::string out;
};

int cmd_gen_data(const GenDataOptions& o, const std::vector<std::string>& args, std::ostream& out) {
  ScenarioConfig base = default_scenario(o.users, o.antennas);
  base.p_max_w = dbm_to_watts(o.p_max_dbm);
  base.p_c_w = dbm_to_watts(o.p_c_dbm);
  base.noise_var = o.sigma2;
  base.channel_snr_db = o.snr_db;
  base.validate();
  if (o.samples < 1) throw ValidationError("--samples must be >= 1");

  const fs::path target = o.out;
  Manifest manifest("gen-data", args);
  manifest.body["config"] = scenario_json(base);
  manifest.body["config"]["samples"] = o.samples;
  manifest.body["config"]["qos_shift"] = o.qos_shift;
  manifest.body["seed"] = o.seed;
  manifest.body["outputs"]["dataset"] = target.string();
  manifest.write(manifest_beside(target));

  const auto samples = generate_dataset(base, o.samples, o.seed, o.qos_shift);
  write_dataset(target, samples);
  out << "wrote " << samples.size() << " samples to " << target.string() << '\n';
  return kExitOk;
}

struct PgdSolveOptions {
  std::string data;
  std::string out;
  int max_iters = 2000;
};

int cmd_pgd_solve(const PgdSolveOptions& o, const std::vector<std::string>& args,
                  std::ostream& out) {
  if (o.max_iters < 0) throw ValidationError("--max-iters must be >= 0");
  const fs::path target = o.out;
  Manifest manifest("pgd-solve", args);
  manifest.body["config"]["max_iters"] = o.max_iters;
  manifest.body["config"]["solver"] = "pgd-backtracking";
  manifest.body["inputs"]["data"] = o.data;
  manifest.body["outputs"]["dataset"] = target.string();
  manifest.write(manifest_beside(target));

  std::vector<ChannelSample> samples = load_data(o.data);
  int feasible = 0;
  for (auto& sample : samples) {
    PgdConfig config = oracle_pgd_config(sample.config);
    config.max_iters = o.max_iters;
    const PgdResult result = pgd_solve(sample, config, init_state(sample));
    sample.label = BenchmarkLabel{result.best_wsr, result.best};
    feasible += result.best_feasible ? 1 : 0;
  }
  write_dataset(target, samples);
  out << "labeled " << samples.size() << " samples (" << feasible << " feasible) to "
      << target.string() << '\n';
  return kExitOk;
}

struct TrainOptions {
  std::string data;
  std::string out;
  int layers = 4;
  int epochs = 1600;
  int batch = 200;
  double lr = 1e-3;
  std::optional<double> lambda;
  std::string grad_method = "central_fd";
  double fd_step = 1e-4;
  std::uint64_t seed = 0;
  int log_every = 50;
  int threads = 0;
};

int cmd_train(const TrainOptions& o, const std::vector<std::string>& args, std::ostream& out) {
  TrainConfig config;
  config.epochs = o.epochs;
  config.batch_size = o.batch;
  config.lr = o.lr;
  config.seed = o.seed;
  config.layers = o.layers;
  config.lambda = o.lambda;
  config.grad_method = parse_grad_method(o.grad_method);
  config.fd_step = o.fd_step;
  config.threads = resolve_threads(o.threads);
  config.validate();

  const fs::path dir = prepare_dir(o.out);
  Manifest manifest("train", args);
  manifest.body["config"] = {{"layers", config.layers},
                             {"epochs", config.epochs},
                             {"batch_size", config.batch_size},
                             {"lr", config.lr},
                             {"lambda", o.lambda ? json(*o.lambda) : json("2*max(alpha)")},
                             {"grad_method", to_string(config.grad_method)},
                             {"fd_step", config.fd_step},
                             {"adam", {{"beta1", config.beta1}, {"beta2", config.beta2},
                                       {"epsilon", config.epsilon}}},
                             {"threads", config.threads}};
  manifest.body["seed"] = config.seed;
  manifest.body["inputs"]["data"] = o.data;
  manifest.body["outputs"] = {{"model", (dir / "model.json").string()},
                              {"history", (dir / "history.csv").string()}};
  manifest.write(dir / "manifest.json");

  const std::vector<ChannelSample> samples = load_data(o.data);
  const ReferenceSet reference = reference_wsr(samples);
  const TrainResult result =
      train(samples, config, reference.wsr, [&](const EpochRecord& r) {
        if (o.log_every > 0 && (r.epoch % o.log_every == 0 || r.epoch == config.epochs))
          out << "epoch " << r.epoch << " loss " << r.loss << " asr " << r.train_asr
              << " violation " << r.train_violation_rate << std::endl;
      });
  save_checkpoint(dir / "model.json", result.model, config);
  write_text(dir / "history.csv", history_csv(result.history));
  if (result.diverged) {
    out << "training stopped: " << result.message << "; last good model saved\n";
    return kExitNumerical;
  }
  out << "saved " << (dir / "model.json").string() << " (reference: " << to_string(reference.kind)
      << ")\n";
  return kExitOk;
}

struct EvalOptions {
  std::string data;
  std::string model;
  std::string reference = "label";
  std::string out;
  std::string run_id = "eval";
};

int cmd_eval(const EvalOptions& o, const std::vector<std::string>& args, std::ostream& out) {
  const fs::path dir = prepare_dir(o.out);
  Manifest manifest("eval", args);
  manifest.body["config"]["reference"] = o.reference;
  manifest.body["config"]["violation_counting"] = "per-constraint";
  manifest.body["inputs"] = {{"data", o.data}, {"model", o.model}};
  manifest.body["outputs"] = {{"metrics", (dir / (o.run_id + "_metrics.json")).string()},
                              {"per_layer", (dir / (o.run_id + "_per_layer.csv")).string()}};
  manifest.write(dir / "manifest.json");

  require_file("--model", o.model);
  const ModelParams model = load_checkpoint(o.model);
  const std::vector<ChannelSample> samples = load_data(o.data);
  check_model_matches(model, samples);

  ReferenceSet reference;
  if (o.reference == "label") {
    for (std::size_t i = 0; i < samples.size(); ++i)
      if (!samples[i].label)
        throw ValidationError("--reference label: sample " + std::to_string(i + 1) +
                              " has no wsr_opt");
    reference = reference_wsr(samples, true);
  } else {
    reference = reference_wsr(samples, false);
  }
  const MetricsReport report = evaluate(model, samples, reference);
  write_text(dir / (o.run_id + "_metrics.json"), metrics_json(report) + "\n");
  std::ostringstream layers;
  layers.precision(10);
  layers << "layer,asr\n";
  for (Eigen::Index n = 0; n < report.per_layer_asr.size(); ++n)
    layers << n + 1 << ',' << report.per_layer_asr[n] << '\n';
  write_text(dir / (o.run_id + "_per_layer.csv"), layers.str());
  out << "asr " << report.asr << " violation_rate " << report.violation_rate << " reference "
      << to_string(report.reference) << '\n';
  return kExitOk;
}

struct OodOptions {
  std::string model;
  std::string axis = "snr_db";
  std::vector<double> values;
  int samples = 100;
  std::uint64_t seed = 1;
  std::string out;
  std::string run_id = "ood";
};

int cmd_ood(const OodOptions& o, const std::vector<std::string>& args, std::ostream& out) {
  SweepSpec spec;
  spec.axis = parse_sweep_axis(o.axis);
  spec.values = o.values;
  spec.samples = o.samples;
  spec.seed = o.seed;
  if (spec.values.empty()) throw ValidationError("--values needs at least one value");
  if (spec.samples < 1) throw ValidationError("--samples must be >= 1");

  const fs::path dir = prepare_dir(o.out);
  Manifest manifest("ood", args);
  manifest.body["config"] = {{"axis", to_string(spec.axis)},
                             {"values", spec.values},
                             {"samples", spec.samples}};
  manifest.body["seed"] = spec.seed;
  manifest.body["inputs"]["model"] = o.model;
  manifest.body["outputs"]["sweep"] = (dir / (o.run_id + "_ood.csv")).string();
  manifest.write(dir / "manifest.json");

  require_file("--model", o.model);
  const ModelParams model = load_checkpoint(o.model);
  spec.base = model.config;
  const auto rows = ood_sweep(spec, model);
  write_text(dir / (o.run_id + "_ood.csv"), sweep_csv(spec.axis, rows));
  for (const auto& row : rows)
    out << to_string(spec.axis) << '=' << row.value << " asr " << row.asr << " violation_rate "
        << row.violation_rate << '\n';
  return kExitOk;
}

struct BenchOptions {
  std::string model;
  std::string data;
  int trials = 1000;
  int samples = 100;
  std::uint64_t seed = 1;
  std::string out;
  std::string run_id = "bench";
};

int cmd_bench(const BenchOptions& o, const std::vector<std::string>& args, std::ostream& out) {
  if (o.trials < 100) throw ValidationError("--trials must be >= 100");
  const fs::path dir = prepare_dir(o.out);
  Manifest manifest("bench", args);
  manifest.body["config"] = {{"trials", o.trials}, {"samples", o.samples}, {"threads", 1}};
  manifest.body["seed"] = o.seed;
  manifest.body["inputs"]["model"] = o.model;
  if (!o.data.empty()) manifest.body["inputs"]["data"] = o.data;
  manifest.body["outputs"] = {{"runtime", (dir / (o.run_id + "_runtime.csv")).string()},
                              {"summary", (dir / (o.run_id + "_summary.json")).string()}};
  manifest.write(dir / "manifest.json");

  require_file("--model", o.model);
  const ModelParams model = load_checkpoint(o.model);
  std::vector<ChannelSample> samples;
  if (o.data.empty()) {
    if (o.samples < 1) throw ValidationError("--samples must be >= 1");
    samples = generate_dataset(model.config, o.samples, o.seed);
  } else {
    samples = load_data(o.data);
    check_model_matches(model, samples);
  }
  const RuntimeSamples runs = runtime_bench(model, samples, o.trials);
  const RuntimeSummary summary = summarize(runs);
  write_text(dir / (o.run_id + "_runtime.csv"), runtime_csv(runs));
  const json summary_json = {{"du_median_s", summary.du_median},
                             {"pgd_median_s", summary.pgd_median},
                             {"du_variance", summary.du_variance},
                             {"pgd_variance", summary.pgd_variance},
                             {"speedup", summary.pgd_median / summary.du_median}};
  write_text(dir / (o.run_id + "_summary.json"), summary_json.dump(2) + "\n");
  out << "du median " << summary.du_median << " s, pgd median " << summary.pgd_median
      << " s, speedup " << summary.pgd_median / summary.du_median << "x\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Deep-unfolded projected-gradient beamforming for QoS-aware RSMA", "rsma_unfold"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (fallback: RSMA_UNFOLD_THREADS)");

  GenDataOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate an unlabeled JSONL dataset");
  gen_cmd->add_option("--users", gen.users)->capture_default_str();
  gen_cmd->add_option("--antennas", gen.antennas)->capture_default_str();
  gen_cmd->add_option("--samples", gen.samples)->capture_default_str();
  gen_cmd->add_option("--snr-db", gen.snr_db)->capture_default_str();
  gen_cmd->add_option("--p-max-dbm", gen.p_max_dbm)->capture_default_str();
  gen_cmd->add_option("--p-c-dbm", gen.p_c_dbm)->capture_default_str();
  gen_cmd->add_option("--sigma2", gen.sigma2)->capture_default_str();
  gen_cmd->add_option("--qos-shift", gen.qos_shift, "Constant added to every r_k")
      ->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed)->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output .jsonl file")->required();

  PgdSolveOptions pgd;
  auto* pgd_cmd = app.add_subcommand("pgd-solve", "Label a dataset with the PGD oracle");
  pgd_cmd->add_option("--data", pgd.data)->required();
  pgd_cmd->add_option("--out", pgd.out, "Output .jsonl file")->required();
  pgd_cmd->add_option("--max-iters", pgd.max_iters)->capture_default_str();

  TrainOptions tr;
  double lambda = 0.0;
  auto* train_cmd = app.add_subcommand("train", "Train the unfolded network");
  train_cmd->add_option("--data", tr.data)->required();
  train_cmd->add_option("--out", tr.out, "Output directory")->required();
  train_cmd->add_option("--layers", tr.layers)->capture_default_str();
  train_cmd->add_option("--epochs", tr.epochs)->capture_default_str();
  train_cmd->add_option("--batch", tr.batch)->capture_default_str();
  train_cmd->add_option("--lr", tr.lr)->capture_default_str();
  auto* lambda_opt = train_cmd->add_option("--lambda", lambda, "Penalty factor (default 2 max alpha)");
  train_cmd->add_option("--grad-method", tr.grad_method)
      ->check(CLI::IsMember({"central_fd", "adjoint"}))
      ->capture_default_str();
  train_cmd->add_option("--fd-step", tr.fd_step)->capture_default_str();
  train_cmd->add_option("--seed", tr.seed)->capture_default_str();
  train_cmd->add_option("--log-every", tr.log_every)->capture_default_str();
  train_cmd->add_option("--threads", threads);

  EvalOptions ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  eval_cmd->add_option("--data", ev.data)->required();
  eval_cmd->add_option("--model", ev.model)->required();
  eval_cmd->add_option("--reference", ev.reference)
      ->check(CLI::IsMember({"label", "pgd"}))
      ->capture_default_str();
  eval_cmd->add_option("--out", ev.out, "Output directory")->required();
  eval_cmd->add_option("--run-id", ev.run_id)->capture_default_str();

  OodOptions ood;
  auto* ood_cmd = app.add_subcommand("ood", "Out-of-distribution sweep");
  ood_cmd->add_option("--model", ood.model)->required();
  ood_cmd->add_option("--axis", ood.axis)
      ->check(CLI::IsMember({"snr_db", "p_max_dbm", "qos_shift"}))
      ->capture_default_str();
  ood_cmd->add_option("--values", ood.values)->delimiter(',')->required();
  ood_cmd->add_option("--samples", ood.samples)->capture_default_str();
  ood_cmd->add_option("--seed", ood.seed)->capture_default_str();
  ood_cmd->add_option("--out", ood.out, "Output directory")->required();
  ood_cmd->add_option("--run-id", ood.run_id)->capture_default_str();

  BenchOptions bench;
  auto* bench_cmd = app.add_subcommand("bench", "Latency of DU forward vs the PGD oracle");
  bench_cmd->add_option("--model", bench.model)->required();
  bench_cmd->add_option("--data", bench.data, "Dataset (default: generated from the model config)");
  bench_cmd->add_option("--trials", bench.trials)->capture_default_str();
  bench_cmd->add_option("--samples", bench.samples)->capture_default_str();
  bench_cmd->add_option("--seed", bench.seed)->capture_default_str();
  bench_cmd->add_option("--out", bench.out, "Output directory")->required();
  bench_cmd->add_option("--run-id", bench.run_id)->capture_default_str();

  std::vector<std::string> reversed(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(reversed.begin(), reversed.end());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*gen_cmd) return cmd_gen_data(gen, args, out);
    if (*pgd_cmd) return cmd_pgd_solve(pgd, args, out);
    if (*train_cmd) {
      if (*lambda_opt) tr.lambda = lambda;
      tr.threads = threads;
      return cmd_train(tr, args, out);
    }
    if (*eval_cmd) return cmd_eval(ev, args, out);
    if (*ood_cmd) return cmd_ood(ood, args, out);
    if (*bench_cmd) return cmd_bench(bench, args, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitValidation;
}

}  // namespace rsma::cli
