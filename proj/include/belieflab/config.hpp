#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "belieflab/gridworld.hpp"
#include "belieflab/models.hpp"

namespace belieflab {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  std::string env = "room9";  // preset name or map file path
  Algo algo = Algo::CpcAction;
  int future = 30;  // F, ignored by fp
  bool future_given = false;  // set when F is assigned explicitly
  std::uint64_t seed = 1;
  ModelSizes sizes;

  int slice_length = 100;    // T
  int episode_length = 200;  // L, a multiple of T
  std::size_t capacity = 50000;
  int batch = 64;  // N
  double lr = 5e-4;
  double probe_lr = 5e-4;  // Adam step size of the probe heads
  int updates = 200000;

  int warmup_episodes = 64;
  int updates_per_episode = 4;  // one collected episode per this many updates
  int collectors = 0;           // 0 = single-threaded deterministic mode

  int eval_interval = 1000;
  int eval_episodes = 50;
  int eval_episode_length = 200;
  std::uint64_t eval_seed = 0;  // 0 derives it from `seed`

  int checkpoint_interval = 0;  // 0 = only at the end
  bool egocentric = false;
  bool mark_agent = false;
  bool permissive_negatives = false;

  ObservationOptions observation() const { return {egocentric, mark_agent}; }
  std::uint64_t effective_eval_seed() const { return eval_seed != 0 ? eval_seed : seed + 0x9e3779b97f4a7c15ULL; }
};

/// Named starting points: "paper" (full-scale sizes and schedule), "desk"
/// (the calibrated single-core default) and "smoke" (seconds-long runs).
TrainConfig config_preset(std::string_view name);
std::vector<std::string> config_preset_names();

/// Applies one `key=value` assignment. Unknown keys and malformed values
/// throw ConfigError.
void apply_setting(TrainConfig& cfg, std::string_view key, std::string_view value);
/// Reads `key = value` lines; '#' starts a comment. A `preset = name` line,
/// if present, must come first and resets every field to that preset.
TrainConfig parse_config(std::string_view text, TrainConfig base = config_preset("desk"));
TrainConfig load_config(const std::string& path, TrainConfig base = config_preset("desk"));
/// Inverse of parse_config; every key is written.
std::string to_text(const TrainConfig& cfg);

/// Checks ranges; returns warnings (for example F given to fp) and throws
/// ConfigError on invalid values.
std::vector<std::string> validate(const TrainConfig& cfg);

/// "fp", "cpc_1", "cpc_action_30", ...
std::string run_label(const TrainConfig& cfg);

}  // namespace belieflab
