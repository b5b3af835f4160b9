#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "rsma/train.hpp"
#include "rsma/unfold.hpp"

namespace rsma {

inline constexpr int kCheckpointVersion = 1;

/// {"version", "U", "M", "N", "lambda", "layers": [{"w0", "w_k", "eta_k"}], "train_config"}.
/// train_config also carries the scenario snapshot (powers, noise, SNR) and the
/// fixed R^c step so a checkpoint fully determines forward().
std::string checkpoint_json(const ModelParams& model,
                            const std::optional<TrainConfig>& config = std::nullopt);
ModelParams parse_checkpoint(const std::string& text);

void save_checkpoint(const std::filesystem::path& path, const ModelParams& model,
                     const std::optional<TrainConfig>& config = std::nullopt);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace rsma
