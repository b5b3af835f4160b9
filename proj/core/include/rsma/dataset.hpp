#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "rsma/model.hpp"

namespace rsma {

// JSON Lines dataset, one ChannelSample per line:
//   users, antennas, h_re/h_im (U x M), alpha (U), r (U), sigma2, p_max_w, p_c_w
//   optional: wsr_opt, v_re/v_im ((U+1) x M, row 0 is the common beam), r_common (U)

ChannelSample parse_sample_line(std::string_view line);
std::string format_sample_line(const ChannelSample& sample);

/// Reads every non-blank line. Errors name the line number.
std::vector<ChannelSample> read_dataset(const std::filesystem::path& path);
void write_dataset(const std::filesystem::path& path, const std::vector<ChannelSample>& samples);

/// Draws per-sample alpha ~ U(0,1] normalized to sum 1 and r ~ |N(0,1)| + qos_shift,
/// then channels from `base`'s SNR and power settings. Sample i depends only on
/// (seed, i), so prefixes of larger datasets are identical.
std::vector<ChannelSample> generate_dataset(const ScenarioConfig& base, int count,
                                            std::uint64_t seed, double qos_shift = 0.0);

/// Stable per-index seed derivation (splitmix64).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace rsma
