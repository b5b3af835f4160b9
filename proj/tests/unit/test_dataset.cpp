#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "rsma/dataset.hpp"
#include "rsma/errors.hpp"
#include "support.hpp"

namespace rsma {
namespace {

namespace fs = std::filesystem;

fs::path temp_path(const std::string& name) {
  return fs::temp_directory_path() / ("rsma_dataset_" + name);
}

void expect_same_sample(const ChannelSample& a, const ChannelSample& b) {
  EXPECT_EQ(a.channels, b.channels);
  EXPECT_EQ(a.config.weights, b.config.weights);
  EXPECT_EQ(a.config.qos_sinr, b.config.qos_sinr);
  EXPECT_EQ(a.config.noise_var, b.config.noise_var);
  EXPECT_EQ(a.config.p_max_w, b.config.p_max_w);
  EXPECT_EQ(a.config.p_c_w, b.config.p_c_w);
  EXPECT_EQ(a.label.has_value(), b.label.has_value());
}

TEST(Dataset, LineRoundTripIsExact) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ChannelSample s = testing::random_sample(3, 12, seed);
    expect_same_sample(parse_sample_line(format_sample_line(s)), s);
  }
}

TEST(Dataset, LabelRoundTrip) {
  ChannelSample s = testing::random_sample(3, 12, 3);
  BeamState beams = testing::random_state(s, 4);
  s.label = BenchmarkLabel{4.25, beams};
  const ChannelSample back = parse_sample_line(format_sample_line(s));
  ASSERT_TRUE(back.label.has_value());
  EXPECT_EQ(back.label->wsr_opt, 4.25);
  ASSERT_TRUE(back.label->beams.has_value());
  EXPECT_EQ(back.label->beams->common, beams.common);
  EXPECT_EQ(back.label->beams->priv, beams.priv);
  EXPECT_EQ(back.label->beams->common_rate, beams.common_rate);

  s.label = BenchmarkLabel{1.5, std::nullopt};
  const ChannelSample wsr_only = parse_sample_line(format_sample_line(s));
  ASSERT_TRUE(wsr_only.label.has_value());
  EXPECT_FALSE(wsr_only.label->beams.has_value());
}

TEST(Dataset, ErrorsNameTheField) {
  auto message_of = [](const std::string& line) -> std::string {
    try {
      parse_sample_line(line);
    } catch (const ValidationError& e) {
      return e.what();
    }
    return "";
  };
  EXPECT_NE(message_of("{not json").find("malformed"), std::string::npos);
  const std::string good = format_sample_line(testing::random_sample(2, 3, 1));
  std::string missing = good;
  missing.replace(missing.find("\"h_re\""), 6, "\"h_xx\"");
  EXPECT_NE(message_of(missing).find("h_re"), std::string::npos);
  std::string wrong_users = good;
  wrong_users.replace(wrong_users.find("\"users\":2"), 9, "\"users\":3");
  EXPECT_FALSE(message_of(wrong_users).empty());
}

TEST(Dataset, FileRoundTripAndLineNumbers) {
  const auto samples = generate_dataset(default_scenario(), 5, 11);
  const fs::path path = temp_path("roundtrip.jsonl");
  write_dataset(path, samples);
  const auto back = read_dataset(path);
  ASSERT_EQ(back.size(), samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) expect_same_sample(back[i], samples[i]);

  {
    std::ofstream out(path, std::ios::app);
    out << "{\"users\": 1}\n";
  }
  try {
    read_dataset(path);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find(":6:"), std::string::npos) << e.what();
  }
  fs::remove(path);
  EXPECT_THROW(read_dataset(temp_path("missing.jsonl")), ValidationError);
}

TEST(Dataset, GenerationDistribution) {
  const auto samples = generate_dataset(default_scenario(), 200, 3, 0.5);
  double mean_r = 0.0;
  for (const auto& s : samples) {
    EXPECT_NEAR(s.config.weights.sum(), 1.0, 1e-12);
    EXPECT_GT(s.config.weights.minCoeff(), 0.0);
    EXPECT_GE(s.config.qos_sinr.minCoeff(), 0.5);
    mean_r += s.config.qos_sinr.mean();
  }
  // E|N(0,1)| = sqrt(2/pi)
  EXPECT_NEAR(mean_r / 200.0 - 0.5, std::sqrt(2.0 / std::numbers::pi), 0.08);
}

TEST(Dataset, PrefixStableAcrossSizes) {
  const auto small = generate_dataset(default_scenario(), 3, 99);
  const auto large = generate_dataset(default_scenario(), 10, 99);
  for (int i = 0; i < 3; ++i) expect_same_sample(small[i], large[i]);
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
}

}  // namespace
}  // namespace rsma
