// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "rsma/dataset.hpp"
#include "rsma/eval.hpp"
#include "rsma/pgd.hpp"
#include "rsma/projection.hpp"
#include "rsma/train.hpp"
#include "support.hpp"

using namespace rsma;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;

void report(const std::string& name, bool pass, const std::string& detail) {
  std::printf("%s %s: %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void gradient_check() {
  const auto start = Clock::now();
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const ChannelSample s = testing::random_sample(3, 12, 1000 + seed);
    const BeamState st = testing::random_state(s, 2000 + seed);
    const double lambda = 2.0 * s.config.weights.maxCoeff();
    worst = std::max(worst, testing::check_gradients(s, st, update_aux(s, st), lambda).worst());
  }
  const double t = seconds_since(start);
  report("gradient-correctness", worst <= 1e-5 && t < 10.0,
         fmt("50 instances, worst block rel err %.3g (<= 1e-5), %.2f s (< 10 s)", worst, t));
}

void projection_oracle() {
  const auto start = Clock::now();
  double worst_err = 0.0;
  double worst_over = -INFINITY;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const ChannelSample s = testing::random_sample(3, 12, 3000 + seed, 0.3);
    // Up to 3x the budget so the power row is active in some systems.
    const BeamState st = testing::random_state(s, 4000 + seed, 0.5 + 0.025 * seed);
    const ProjectionSystem sys = build_constraint_system(s, power_split(s, st));
    const ProjectedPowers p = affine_project(sys);
    RVector x(sys.a_aug.cols());
    x << p.omega, p.psi;
    RVector x0 = RVector::Zero(x.size());
    x0.head(sys.size()) = sys.a;
    const RVector ref = testing::kkt_project(x0, sys.a_aug, sys.b);
    worst_err = std::max(worst_err, (x - ref).norm() / std::max(ref.norm(), 1e-300));
    const BeamState out = project(s, st, ProjectionMode::always);
    worst_over = std::max(worst_over, out.transmit_power() - s.config.power_budget());
  }
  const double t = seconds_since(start);
  report("projection-oracle", worst_err <= 1e-8 && worst_over <= 1e-9 && t < 5.0,
         fmt("100 systems, worst rel err %.3g (<= 1e-8), max power excess %.3g W (<= 1e-9), "
             "%.2f s (< 5 s)",
             worst_err, worst_over, t));
}

void pgd_containment() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ChannelSample s = testing::random_sample(3, 12, 5000 + seed);
    PgdConfig pgd = default_pgd_config(s.config);
    pgd.private_step << 0.01, 0.02, 0.005;
    pgd.common_step = 0.015;
    const ModelParams model = testing::pgd_equivalent_model(s.config, pgd, 1);
    const BeamState st = project(s, testing::random_state(s, 6000 + seed));
    const BeamState via_layer = layer_forward(s, st, model.layers[0], model.lambda,
                                              env_vector(s.config), model.rate_step);
    const BeamState via_pgd = pgd_step(s, st, update_aux(s, st), pgd);
    worst = std::max(worst, testing::max_abs_diff(via_layer, via_pgd));
  }
  report("pgd-containment", worst <= 1e-10,
         fmt("20 instances, max |layer - pgd_step| %.3g (<= 1e-10)", worst));
}

struct TrainedModel {
  TrainResult result;
  MetricsReport test;
  double seconds = 0.0;
};

TrainedModel train_and_test(int layers, const std::vector<ChannelSample>& train_set,
                            const std::vector<double>& train_ref,
                            const std::vector<ChannelSample>& test_set,
                            const ReferenceSet& test_ref) {
  TrainConfig config;
  config.layers = layers;
  config.epochs = 300;
  config.batch_size = 200;
  config.seed = 0;
  TrainedModel out;
  const auto start = Clock::now();
  out.result = train(train_set, config, train_ref);
  out.seconds = seconds_since(start);
  out.test = evaluate(out.result.model, test_set, test_ref);
  std::printf("  trained N=%d in %.1f s: test asr %.4f, violation rate %.5f%s\n", layers,
              out.seconds, out.test.asr, out.test.violation_rate,
              out.result.diverged ? " (diverged)" : "");
  std::fflush(stdout);
  return out;
}

}  // namespace

int main() {
  gradient_check();
  projection_oracle();
  pgd_containment();

  const ScenarioConfig base = default_scenario();
  const auto train_set = generate_dataset(base, 300, 11);
  const auto test_set = generate_dataset(base, 200, 12);
  const ReferenceSet train_ref = reference_wsr(train_set, false);
  const ReferenceSet test_ref = reference_wsr(test_set, false);

  std::vector<TrainedModel> models;
  for (int n = 1; n <= 4; ++n) models.push_back(train_and_test(n, train_set, train_ref.wsr, test_set, test_ref));
  const TrainedModel& main_model = models.back();

  report("training-effectiveness",
         !main_model.result.diverged && main_model.test.asr >= 0.85 &&
             main_model.test.violation_rate <= 0.01 && main_model.seconds <= 3600.0,
         fmt("N=4, 300 epochs, 300 samples: test ASR vs PGD oracle %.4f (>= 0.85), violation "
             "rate %.5f (<= 0.01), %.1f s (<= 3600 s)",
             main_model.test.asr, main_model.test.violation_rate, main_model.seconds));

  {
    std::vector<double> asr;
    for (const auto& m : models) asr.push_back(m.test.asr);
    const auto best = std::max_element(asr.begin(), asr.end()) - asr.begin();
    bool monotone = true;
    for (long n = 0; n < best; ++n) monotone = monotone && asr[n + 1] >= asr[n] - 0.02;
    report("layer-monotonicity", monotone,
           fmt("test ASR N=1..4: %.4f %.4f %.4f %.4f, best N=%ld, nondecreasing up to best "
               "within 2 pp",
               asr[0], asr[1], asr[2], asr[3], best + 1));
  }

  {
    SweepSpec spec;
    spec.axis = SweepAxis::snr_db;
    spec.values = {5.0, 10.0, 17.5};
    spec.base = base;
    spec.samples = 200;
    spec.seed = 13;
    const auto rows = ood_sweep(spec, main_model.result.model);
    bool pass = true;
    std::string detail = fmt("in-distribution ASR %.4f;", main_model.test.asr);
    for (const auto& row : rows) {
      pass = pass && std::abs(row.asr - main_model.test.asr) <= 0.10 && row.violation_rate <= 0.02;
      detail += fmt(" %.1f dB: ASR %.4f, violation %.5f;", row.value, row.asr, row.violation_rate);
    }
    report("ood-stability", pass, detail + " (within 10 pp, violation <= 0.02)");
  }

  {
    const auto bench_set = generate_dataset(base, 1000, 14);
    const RuntimeSummary summary =
        summarize(runtime_bench(main_model.result.model, bench_set, 1000));
    const double ratio = summary.pgd_median / summary.du_median;
    report("speed", ratio >= 10.0,
           fmt("1000 samples: DU median %.3g s, PGD median %.3g s, ratio %.1f (>= 10)",
               summary.du_median, summary.pgd_median, ratio));
  }

  {
    const auto& history = main_model.result.history;
    const int epochs = static_cast<int>(history.size()) - 1;
    const auto peak_it = std::max_element(history.begin(), history.end(),
                                          [](const auto& a, const auto& b) { return a.tpfv < b.tpfv; });
    const double peak = peak_it->tpfv;
    bool drop_ok = true;
    std::string drop_detail;
    if (peak <= 0.0) {
      drop_detail = "TPFV peak 0 (no violations at any epoch), drop condition holds trivially";
    } else {
      const int window = static_cast<int>(0.15 * epochs);
      int reached = -1;
      for (int e = peak_it->epoch; e < static_cast<int>(history.size()); ++e)
        if (history[e].tpfv <= 0.1 * peak) {
          reached = e;
          break;
        }
      drop_ok = reached >= 0 && reached <= window;
      drop_detail = fmt("TPFV peak %.4g at epoch %d, <= 10%% of peak by epoch %d (limit %d)", peak,
                        peak_it->epoch, reached, window);
    }
    const double final_tpfv = history.back().tpfv;
    const double final_lpfv = history.back().lpfv;
    report("loss-decomposition", drop_ok && final_lpfv <= 2.0 * final_tpfv,
           drop_detail + fmt("; final LPFV %.4g <= 2 x TPFV %.4g", final_lpfv, final_tpfv));
  }

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
