#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rsma/checkpoint.hpp"
#include "rsma/dataset.hpp"
#include "rsma/errors.hpp"
#include "rsma/train.hpp"
#include "rsma_cli/cli.hpp"

namespace fs = std::filesystem;

namespace rsma::cli {
namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("rsma_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "rsma_unfold");
    out_.str("");
    err_.str("");
    return run(args, out_, err_);
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  }

  fs::path dir_;
  std::ostringstream out_;
  std::ostringstream err_;
};

TEST_F(CliTest, GenDataDefaultsWriteDatasetAndManifest) {
  ASSERT_EQ(invoke({"gen-data", "--out", path("d.jsonl")}), kExitOk) << err_.str();
  const std::string text = slurp(path("d.jsonl"));
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 300);
  const auto data = read_dataset(path("d.jsonl"));
  ASSERT_EQ(data.size(), 300u);
  EXPECT_EQ(data[0].num_users(), 3);
  EXPECT_EQ(data[0].num_antennas(), 12);
  const auto expected = generate_dataset(default_scenario(), 300, 7);
  for (std::size_t i = 0; i < data.size(); ++i) {
    EXPECT_EQ(data[i].channels, expected[i].channels);
    EXPECT_EQ(data[i].config.qos_sinr, expected[i].config.qos_sinr);
  }
  const auto manifest = nlohmann::json::parse(slurp(path("d.manifest.json")));
  for (const char* key : {"command", "argv", "code_version", "timestamp", "config", "seed"})
    EXPECT_TRUE(manifest.contains(key)) << key;
  EXPECT_EQ(manifest["seed"], 7);
}

TEST_F(CliTest, TrainZeroEpochsSavesInitialModel) {
  ASSERT_EQ(invoke({"gen-data", "--samples", "5", "--out", path("d.jsonl")}), kExitOk);
  ASSERT_EQ(invoke({"train", "--data", path("d.jsonl"), "--out", path("run"), "--epochs", "0",
                    "--layers", "2", "--seed", "9", "--lambda", "1.5"}),
            kExitOk)
      << err_.str();
  const ModelParams saved = load_checkpoint(path("run/model.json"));
  const auto data = read_dataset(path("d.jsonl"));
  EXPECT_EQ(saved.flatten(), init_model(data[0].config, 2, 1.5, 9).flatten());
  EXPECT_TRUE(fs::exists(path("run/history.csv")));
  EXPECT_TRUE(fs::exists(path("run/manifest.json")));
}

TEST_F(CliTest, EvalAgainstOwnOutputsGivesAsrOne) {
  const auto data = generate_dataset(default_scenario(), 4, 3);
  const ModelParams model = init_model(default_scenario(), 2, 1.5, 1);
  std::vector<ChannelSample> labelled = data;
  for (auto& s : labelled) s.label = BenchmarkLabel{forward(s, model).wsr[2], std::nullopt};
  write_dataset(path("l.jsonl"), labelled);
  save_checkpoint(path("m.json"), model);
  ASSERT_EQ(invoke({"eval", "--data", path("l.jsonl"), "--model", path("m.json"), "--out",
                    path("ev"), "--run-id", "r1"}),
            kExitOk)
      << err_.str();
  const auto metrics = nlohmann::json::parse(slurp(path("ev/r1_metrics.json")));
  EXPECT_NEAR(metrics["asr"].get<double>(), 1.0, 1e-9);
  EXPECT_EQ(metrics["reference"], "label");
  EXPECT_TRUE(fs::exists(path("ev/r1_per_layer.csv")));

  // Unlabelled data cannot be scored against labels.
  write_dataset(path("u.jsonl"), data);
  EXPECT_EQ(invoke({"eval", "--data", path("u.jsonl"), "--model", path("m.json"), "--out",
                    path("ev2")}),
            kExitValidation);
  EXPECT_NE(err_.str().find("sample 1 has no wsr_opt"), std::string::npos) << err_.str();
  EXPECT_TRUE(fs::exists(path("ev2/manifest.json")));
}

TEST_F(CliTest, ValidationFailuresExitOne) {
  EXPECT_EQ(invoke({}), kExitValidation);
  EXPECT_EQ(invoke({"gen-data"}), kExitValidation);
  EXPECT_EQ(invoke({"gen-data", "--users", "0", "--out", path("d.jsonl")}), kExitValidation);
  EXPECT_EQ(invoke({"train", "--data", path("missing.jsonl"), "--out", path("run")}),
            kExitValidation);
  EXPECT_NE(err_.str().find("missing.jsonl"), std::string::npos);
  ASSERT_EQ(invoke({"gen-data", "--samples", "2", "--out", path("d.jsonl")}), kExitOk);
  EXPECT_EQ(invoke({"train", "--data", path("d.jsonl"), "--out", path("run"), "--grad-method",
                    "adjoint"}),
            kExitValidation);
  EXPECT_EQ(invoke({"ood", "--model", path("none.json"), "--values", "5", "--out", path("o")}),
            kExitValidation);
  EXPECT_EQ(invoke({"--help"}), kExitOk);
}

TEST_F(CliTest, DimensionMismatchIsReported) {
  ASSERT_EQ(invoke({"gen-data", "--samples", "2", "--users", "2", "--out", path("d.jsonl")}),
            kExitOk);
  save_checkpoint(path("m.json"), init_model(default_scenario(), 1, 1.5, 1));
  EXPECT_EQ(invoke({"eval", "--data", path("d.jsonl"), "--model", path("m.json"), "--reference",
                    "pgd", "--out", path("ev")}),
            kExitValidation);
  EXPECT_NE(err_.str().find("users=2"), std::string::npos) << err_.str();
}

TEST_F(CliTest, NonFiniteForwardExitsTwo) {
  ModelParams model = init_model(default_scenario(), 1, 1.5, 1);
  model.layers[0].w.setConstant(1e300);
  save_checkpoint(path("m.json"), model);
  ASSERT_EQ(invoke({"gen-data", "--samples", "2", "--out", path("d.jsonl")}), kExitOk);
  EXPECT_EQ(invoke({"eval", "--data", path("d.jsonl"), "--model", path("m.json"), "--reference",
                    "pgd", "--out", path("ev")}),
            kExitNumerical)
      << err_.str();
}

TEST_F(CliTest, PgdSolveLabelsEverySample) {
  ASSERT_EQ(invoke({"gen-data", "--samples", "3", "--out", path("d.jsonl")}), kExitOk);
  ASSERT_EQ(invoke({"pgd-solve", "--data", path("d.jsonl"), "--out", path("l.jsonl")}), kExitOk)
      << err_.str();
  const auto labelled = read_dataset(path("l.jsonl"));
  ASSERT_EQ(labelled.size(), 3u);
  for (const auto& s : labelled) {
    ASSERT_TRUE(s.label.has_value());
    EXPECT_GT(s.label->wsr_opt, 0.0);
    EXPECT_TRUE(s.label->beams.has_value());
  }
  EXPECT_TRUE(fs::exists(path("l.manifest.json")));
}

TEST_F(CliTest, OodAndBenchOutputs) {
  save_checkpoint(path("m.json"), init_model(default_scenario(), 1, 1.5, 1));
  ASSERT_EQ(invoke({"ood", "--model", path("m.json"), "--axis", "snr_db", "--values", "5,10",
                    "--samples", "3", "--out", path("o")}),
            kExitOk)
      << err_.str();
  const std::string csv = slurp(path("o/ood_ood.csv"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_EQ(invoke({"bench", "--model", path("m.json"), "--trials", "10", "--out", path("b")}),
            kExitValidation);
  ASSERT_EQ(invoke({"bench", "--model", path("m.json"), "--trials", "100", "--samples", "5",
                    "--out", path("b")}),
            kExitOk)
      << err_.str();
  const auto summary = nlohmann::json::parse(slurp(path("b/bench_summary.json")));
  EXPECT_TRUE(summary.contains("du_median_s"));
  EXPECT_TRUE(fs::exists(path("b/manifest.json")));
}

TEST(Threads, FlagThenEnvironmentThenOne) {
  unsetenv("RSMA_UNFOLD_THREADS");
  EXPECT_EQ(resolve_threads(0), 1);
  EXPECT_EQ(resolve_threads(3), 3);
  setenv("RSMA_UNFOLD_THREADS", "2", 1);
  EXPECT_EQ(resolve_threads(0), 2);
  EXPECT_EQ(resolve_threads(4), 4);
  setenv("RSMA_UNFOLD_THREADS", "two", 1);
  EXPECT_THROW(resolve_threads(0), ValidationError);
  unsetenv("RSMA_UNFOLD_THREADS");
}

}  // namespace
}  // namespace rsma::cli
