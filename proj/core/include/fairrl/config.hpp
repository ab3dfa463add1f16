#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "fairrl/lending_env.hpp"
#include "fairrl/trainer.hpp"

namespace fairrl {

struct LoadedConfig {
    EnvConfig env;
    TrainConfig train;
};

/// Parses a JSON document with optional top-level objects "env" and "train".
///
/// env keys: preset, num_levels, group_prior, init_score_dist{plus,minus},
/// repay_prob{plus,minus}, drift_dist{plus,minus} (order -1, 0, +1),
/// gain_potential{plus,minus} (optional), reward_success, reward_default,
/// horizon. Without "preset" every env key except gain_potential is required.
///
/// train keys mirror TrainConfig; missing keys keep their defaults.
/// Unknown keys are rejected with the offending key path in the message.
LoadedConfig parse_config(std::string_view text, std::string_view source = "<string>");

LoadedConfig load_config(const std::filesystem::path& path);

/// Built-in environments "setting1", "setting2", "setting3".
EnvConfig preset(std::string_view name);
std::vector<std::string> preset_names();

/// Raw JSON text of a built-in preset.
std::string_view preset_source(std::string_view name);

}  // namespace fairrl
