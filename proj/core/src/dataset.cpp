#include "rsma/dataset.hpp"

#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "rsma/errors.hpp"

namespace rsma {

using nlohmann::json;

namespace {

RVector read_vector(const json& j, const char* field, int expected) {
  if (!j.contains(field)) throw ValidationError(std::string("missing field '") + field + "'");
  const auto& arr = j.at(field);
  if (!arr.is_array() || static_cast<int>(arr.size()) != expected)
    throw ValidationError(std::string("field '") + field + "' must have " +
                          std::to_string(expected) + " entries");
  RVector out(expected);
  for (int i = 0; i < expected; ++i) out[i] = arr[i].get<double>();
  return out;
}

// rows x cols complex matrix from two nested arrays, returned transposed (cols x rows)
// so that each JSON row becomes a column vector.
CMatrix read_complex_rows(const json& j, const char* re_field, const char* im_field, int rows,
                          int cols) {
  for (const char* field : {re_field, im_field}) {
    if (!j.contains(field)) throw ValidationError(std::string("missing field '") + field + "'");
    const auto& arr = j.at(field);
    if (!arr.is_array() || static_cast<int>(arr.size()) != rows)
      throw ValidationError(std::string("field '") + field + "' must have " +
                            std::to_string(rows) + " rows");
    for (const auto& row : arr)
      if (!row.is_array() || static_cast<int>(row.size()) != cols)
        throw ValidationError(std::string("field '") + field + "' rows must have " +
                              std::to_string(cols) + " entries");
  }
  const auto& re = j.at(re_field);
  const auto& im = j.at(im_field);
  CMatrix out(cols, rows);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) out(c, r) = {re[r][c].get<double>(), im[r][c].get<double>()};
  return out;
}

void write_complex_rows(json& j, const char* re_field, const char* im_field,
                        const CMatrix& columns) {
  json re = json::array();
  json im = json::array();
  for (Eigen::Index c = 0; c < columns.cols(); ++c) {
    json re_row = json::array();
    json im_row = json::array();
    for (Eigen::Index r = 0; r < columns.rows(); ++r) {
      re_row.push_back(columns(r, c).real());
      im_row.push_back(columns(r, c).imag());
    }
    re.push_back(std::move(re_row));
    im.push_back(std::move(im_row));
  }
  j[re_field] = std::move(re);
  j[im_field] = std::move(im);
}

json to_array(const RVector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

}  // namespace

ChannelSample parse_sample_line(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("malformed JSON: ") + e.what());
  }
  try {
    ChannelSample sample;
    ScenarioConfig& config = sample.config;
    config.num_users = j.at("users").get<int>();
    config.num_antennas = j.at("antennas").get<int>();
    if (config.num_users < 1) throw ValidationError("users must be >= 1");
    if (config.num_antennas < 1) throw ValidationError("antennas must be >= 1");
    config.noise_var = j.at("sigma2").get<double>();
    config.p_max_w = j.at("p_max_w").get<double>();
    config.p_c_w = j.at("p_c_w").get<double>();
    config.weights = read_vector(j, "alpha", config.num_users);
    config.qos_sinr = read_vector(j, "r", config.num_users);
    sample.channels =
        read_complex_rows(j, "h_re", "h_im", config.num_users, config.num_antennas);

    if (j.contains("wsr_opt") && !j.at("wsr_opt").is_null()) {
      BenchmarkLabel label;
      label.wsr_opt = j.at("wsr_opt").get<double>();
      if (j.contains("v_re")) {
        const CMatrix beams =
            read_complex_rows(j, "v_re", "v_im", config.num_users + 1, config.num_antennas);
        BeamState state;
        state.common = beams.col(0);
        state.priv = beams.rightCols(config.num_users);
        state.common_rate = j.contains("r_common") ? read_vector(j, "r_common", config.num_users)
                                                   : RVector::Zero(config.num_users);
        label.beams = std::move(state);
      }
      sample.label = std::move(label);
    }
    sample.validate();
    return sample;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad sample record: ") + e.what());
  }
}

std::string format_sample_line(const ChannelSample& sample) {
  json j;
  j["users"] = sample.num_users();
  j["antennas"] = sample.num_antennas();
  write_complex_rows(j, "h_re", "h_im", sample.channels);
  j["alpha"] = to_array(sample.config.weights);
  j["r"] = to_array(sample.config.qos_sinr);
  j["sigma2"] = sample.config.noise_var;
  j["p_max_w"] = sample.config.p_max_w;
  j["p_c_w"] = sample.config.p_c_w;
  if (sample.label) {
    j["wsr_opt"] = sample.label->wsr_opt;
    if (sample.label->beams) {
      const BeamState& beams = *sample.label->beams;
      CMatrix stacked(beams.num_antennas(), beams.num_users() + 1);
      stacked.col(0) = beams.common;
      stacked.rightCols(beams.num_users()) = beams.priv;
      write_complex_rows(j, "v_re", "v_im", stacked);
      j["r_common"] = to_array(beams.common_rate);
    }
  }
  return j.dump();
}

std::vector<ChannelSample> read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open dataset '" + path.string() + "'");
  std::vector<ChannelSample> samples;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      samples.push_back(parse_sample_line(line));
    } catch (const ValidationError& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return samples;
}

void write_dataset(const std::filesystem::path& path, const std::vector<ChannelSample>& samples) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write dataset '" + path.string() + "'");
  for (const auto& sample : samples) out << format_sample_line(sample) << '\n';
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<ChannelSample> generate_dataset(const ScenarioConfig& base, int count,
                                            std::uint64_t seed, double qos_shift) {
  if (count < 0) throw ValidationError("samples must be >= 0");
  std::vector<ChannelSample> samples;
  samples.reserve(count);
  const int users = base.num_users;
  for (int i = 0; i < count; ++i) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    // (0, 1]: flip the half-open [0, 1) draw.
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    ScenarioConfig config = base;
    config.weights.resize(users);
    config.qos_sinr.resize(users);
    for (int k = 0; k < users; ++k) config.weights[k] = 1.0 - unit(rng);
    config.weights /= config.weights.sum();
    for (int k = 0; k < users; ++k) config.qos_sinr[k] = std::abs(normal(rng)) + qos_shift;
    samples.push_back(generate_channels(config, rng()));
  }
  return samples;
}

}  // namespace rsma
