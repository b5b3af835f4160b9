#include "rsma/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rsma/errors.hpp"

namespace rsma {

using nlohmann::json;

namespace {

json vector_json(const RVector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json matrix_json(const RMatrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vector_json(m.row(r)));
  return rows;
}

RVector vector_from(const json& j, Eigen::Index size, const std::string& what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != size)
    throw ValidationError("checkpoint field " + what + " must have " + std::to_string(size) +
                          " entries");
  RVector v(size);
  for (Eigen::Index i = 0; i < size; ++i) v[i] = j[i].get<double>();
  return v;
}

RMatrix matrix_from(const json& j, Eigen::Index rows, Eigen::Index cols, const std::string& what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
    throw ValidationError("checkpoint field " + what + " must have " + std::to_string(rows) +
                          " rows");
  RMatrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    m.row(r) = vector_from(j[r], cols, what + "[" + std::to_string(r) + "]");
  return m;
}

}  // namespace

std::string checkpoint_json(const ModelParams& model, const std::optional<TrainConfig>& config) {
  json j;
  j["version"] = kCheckpointVersion;
  j["U"] = model.config.num_users;
  j["M"] = model.config.num_antennas;
  j["N"] = model.num_layers();
  j["lambda"] = model.lambda;
  json layers = json::array();
  for (const auto& layer : model.layers) {
    json l;
    l["w0"] = vector_json(layer.w0);
    l["w_k"] = matrix_json(layer.w);
    l["eta_k"] = matrix_json(layer.eta);
    layers.push_back(std::move(l));
  }
  j["layers"] = std::move(layers);

  json tc;
  tc["rate_step"] = model.rate_step;
  tc["p_max_w"] = model.config.p_max_w;
  tc["p_c_w"] = model.config.p_c_w;
  tc["sigma2"] = model.config.noise_var;
  tc["snr_db"] = model.config.channel_snr_db;
  if (config) {
    tc["epochs"] = config->epochs;
    tc["batch_size"] = config->batch_size;
    tc["lr"] = config->lr;
    tc["seed"] = config->seed;
    tc["grad_method"] = to_string(config->grad_method);
    tc["fd_step"] = config->fd_step;
  }
  j["train_config"] = std::move(tc);
  return j.dump(2);
}

ModelParams parse_checkpoint(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("malformed checkpoint JSON: ") + e.what());
  }
  try {
    if (j.at("version").get<int>() != kCheckpointVersion)
      throw ValidationError("unsupported checkpoint version");
    const int users = j.at("U").get<int>();
    const int antennas = j.at("M").get<int>();
    const int layers = j.at("N").get<int>();
    if (users < 1 || antennas < 1 || layers < 0)
      throw ValidationError("checkpoint U, M must be >= 1 and N >= 0");

    ModelParams model;
    model.config = default_scenario(users, antennas);
    model.lambda = j.at("lambda").get<double>();
    if (j.contains("train_config")) {
      const json& tc = j.at("train_config");
      model.rate_step = tc.value("rate_step", model.rate_step);
      model.config.p_max_w = tc.value("p_max_w", model.config.p_max_w);
      model.config.p_c_w = tc.value("p_c_w", model.config.p_c_w);
      model.config.noise_var = tc.value("sigma2", model.config.noise_var);
      model.config.channel_snr_db = tc.value("snr_db", model.config.channel_snr_db);
    }
    const json& arr = j.at("layers");
    if (!arr.is_array() || static_cast<int>(arr.size()) != layers)
      throw ValidationError("checkpoint has " + std::to_string(arr.size()) + " layers, N=" +
                            std::to_string(layers));
    for (int n = 0; n < layers; ++n) {
      const std::string where = "layers[" + std::to_string(n) + "]";
      LayerParams layer;
      layer.w0 = vector_from(arr[n].at("w0"), users + 1, where + ".w0");
      layer.w = matrix_from(arr[n].at("w_k"), users, users + 1, where + ".w_k");
      layer.eta = matrix_from(arr[n].at("eta_k"), users, users + 1, where + ".eta_k");
      model.layers.push_back(std::move(layer));
    }
    model.validate();
    return model;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& model,
                     const std::optional<TrainConfig>& config) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write checkpoint '" + path.string() + "'");
  out << checkpoint_json(model, config) << '\n';
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open checkpoint '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_checkpoint(buffer.str());
}

}  // namespace rsma
