#include "belieflab/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace belieflab {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(std::string_view key, std::string_view v) {
  T out{};
  const auto* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) {
    throw ConfigError("bad value '" + std::string(v) + "' for " + std::string(key));
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("bad boolean '" + std::string(v) + "' for " + std::string(key));
}

std::string format_double(double d) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, d);
  return std::string(buf, p);
}

struct Field {
  const char* key;
  std::function<std::string(const TrainConfig&)> get;
  std::function<void(TrainConfig&, std::string_view)> set;
};

template <class T>
Field int_field(const char* key, T TrainConfig::*member) {
  return {key, [member](const TrainConfig& c) { return std::to_string(c.*member); },
          [key, member](TrainConfig& c, std::string_view v) { c.*member = parse_number<T>(key, v); }};
}

Field size_field(const char* key, int ModelSizes::*member) {
  return {key, [member](const TrainConfig& c) { return std::to_string(c.sizes.*member); },
          [key, member](TrainConfig& c, std::string_view v) { c.sizes.*member = parse_number<int>(key, v); }};
}

Field bool_field(const char* key, bool TrainConfig::*member) {
  return {key, [member](const TrainConfig& c) { return std::string(c.*member ? "true" : "false"); },
          [key, member](TrainConfig& c, std::string_view v) { c.*member = parse_bool(key, v); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"env", [](const TrainConfig& c) { return c.env; },
       [](TrainConfig& c, std::string_view v) { c.env = std::string(v); }},
      {"algo", [](const TrainConfig& c) { return std::string(algo_name(c.algo)); },
       [](TrainConfig& c, std::string_view v) {
         try {
           c.algo = parse_algo(v);
         } catch (const std::invalid_argument& e) {
           throw ConfigError(e.what());
         }
       }},
      {"F", [](const TrainConfig& c) { return std::to_string(c.future); },
       [](TrainConfig& c, std::string_view v) {
         c.future = parse_number<int>("F", v);
         c.future_given = true;
       }},
      int_field("seed", &TrainConfig::seed),
      size_field("encoder_hidden", &ModelSizes::encoder_hidden),
      size_field("Z", &ModelSizes::embedding),
      size_field("B", &ModelSizes::belief),
      size_field("H", &ModelSizes::classifier_hidden),
      size_field("decoder_hidden", &ModelSizes::decoder_hidden),
      size_field("probe_hidden", &ModelSizes::probe_hidden),
      int_field("T", &TrainConfig::slice_length),
      int_field("episode_length", &TrainConfig::episode_length),
      int_field("capacity", &TrainConfig::capacity),
      int_field("N", &TrainConfig::batch),
      {"lr", [](const TrainConfig& c) { return format_double(c.lr); },
       [](TrainConfig& c, std::string_view v) { c.lr = parse_number<double>("lr", v); }},
      {"probe_lr", [](const TrainConfig& c) { return format_double(c.probe_lr); },
       [](TrainConfig& c, std::string_view v) { c.probe_lr = parse_number<double>("probe_lr", v); }},
      int_field("updates", &TrainConfig::updates),
      int_field("warmup_episodes", &TrainConfig::warmup_episodes),
      int_field("updates_per_episode", &TrainConfig::updates_per_episode),
      int_field("collectors", &TrainConfig::collectors),
      int_field("eval_interval", &TrainConfig::eval_interval),
      int_field("eval_episodes", &TrainConfig::eval_episodes),
      int_field("eval_episode_length", &TrainConfig::eval_episode_length),
      int_field("eval_seed", &TrainConfig::eval_seed),
      int_field("checkpoint_interval", &TrainConfig::checkpoint_interval),
      bool_field("egocentric", &TrainConfig::egocentric),
      bool_field("mark_agent", &TrainConfig::mark_agent),
      bool_field("permissive_negatives", &TrainConfig::permissive_negatives),
  };
  return table;
}

}  // namespace

TrainConfig config_preset(std::string_view name) {
  TrainConfig c;
  if (name == "paper") {
    c.sizes.encoder_hidden = 512;
    c.sizes.embedding = 512;
    c.sizes.belief = 512;
    c.sizes.classifier_hidden = 512;
    c.sizes.decoder_hidden = 512;
    c.sizes.probe_hidden = 128;
    return c;
  }
  if (name == "desk") {
    c.sizes.encoder_hidden = 64;
    c.sizes.embedding = 32;
    c.sizes.belief = 64;
    c.sizes.classifier_hidden = 64;
    c.sizes.decoder_hidden = 64;
    c.sizes.probe_hidden = 64;
    c.batch = 4;
    c.capacity = 5000;
    c.updates = 20000;
    c.probe_lr = 2e-3;
    c.eval_interval = 2000;
    return c;
  }
  if (name == "smoke") {
    c.sizes.encoder_hidden = 16;
    c.sizes.embedding = 8;
    c.sizes.belief = 16;
    c.sizes.classifier_hidden = 16;
    c.sizes.decoder_hidden = 16;
    c.sizes.probe_hidden = 16;
    c.slice_length = 10;
    c.episode_length = 20;
    c.future = 3;
    c.batch = 2;
    c.capacity = 200;
    c.updates = 40;
    c.warmup_episodes = 4;
    c.eval_interval = 20;
    c.eval_episodes = 3;
    c.eval_episode_length = 30;
    return c;
  }
  throw ConfigError("unknown config preset '" + std::string(name) + "' (expected paper, desk or smoke)");
}

std::vector<std::string> config_preset_names() { return {"paper", "desk", "smoke"}; }

void apply_setting(TrainConfig& cfg, std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  for (const auto& f : fields()) {
    if (key == f.key) {
      f.set(cfg, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

TrainConfig parse_config(std::string_view text, TrainConfig base) {
  TrainConfig cfg = std::move(base);
  std::size_t line_no = 0;
  bool seen_setting = false;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    try {
      if (key == "preset") {
        if (seen_setting) throw ConfigError("preset must come before other settings");
        cfg = config_preset(value);
      } else {
        apply_setting(cfg, key, value);
      }
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
    seen_setting = true;
  }
  return cfg;
}

TrainConfig load_config(const std::string& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string to_text(const TrainConfig& cfg) {
  std::string out;
  for (const auto& f : fields()) {
    if (cfg.algo == Algo::FramePrediction && std::string_view(f.key) == "F") continue;
    out += std::string(f.key) + " = " + f.get(cfg) + "\n";
  }
  return out;
}

std::vector<std::string> validate(const TrainConfig& cfg) {
  std::vector<std::string> warnings;
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  require(!cfg.env.empty(), "env must be set");
  require(cfg.future >= 1, "F must be at least 1");
  require(cfg.slice_length >= 2, "T must be at least 2");
  require(cfg.episode_length > 0 && cfg.episode_length % cfg.slice_length == 0,
          "episode_length must be a positive multiple of T");
  require(cfg.batch >= 1, "N must be positive");
  require(cfg.capacity >= static_cast<std::size_t>(cfg.batch), "capacity must hold at least one batch");
  require(cfg.lr > 0.0 && cfg.probe_lr > 0.0, "learning rates must be positive");
  require(cfg.updates >= 0, "updates must be non-negative");
  require(cfg.warmup_episodes >= 1, "warmup_episodes must be positive");
  require(cfg.updates_per_episode >= 1, "updates_per_episode must be positive");
  require(cfg.collectors >= 0, "collectors must be non-negative");
  require(cfg.eval_interval >= 1, "eval_interval must be positive");
  require(cfg.eval_episodes >= 1, "eval_episodes must be positive");
  require(cfg.eval_episode_length >= 1, "eval_episode_length must be positive");
  require(cfg.checkpoint_interval >= 0, "checkpoint_interval must be non-negative");
  const auto& s = cfg.sizes;
  require(s.encoder_hidden >= 1 && s.embedding >= 1 && s.belief >= 1 && s.classifier_hidden >= 1 &&
              s.decoder_hidden >= 1 && s.probe_hidden >= 1,
          "layer sizes must be positive");
  require(static_cast<long long>(cfg.warmup_episodes) * (cfg.episode_length / cfg.slice_length) >= cfg.batch,
          "warm-up does not collect enough sub-trajectories for one batch");
  if (cfg.algo == Algo::FramePrediction && cfg.future_given) {
    warnings.push_back("F = " + std::to_string(cfg.future) + " is ignored by fp");
  }
  if (cfg.algo != Algo::FramePrediction && cfg.future > cfg.slice_length) {
    warnings.push_back("F exceeds T; offsets are clamped to the sub-trajectory");
  }
  return warnings;
}

std::string run_label(const TrainConfig& cfg) {
  if (cfg.algo == Algo::FramePrediction) return "fp";
  return std::string(algo_name(cfg.algo)) + "_" + std::to_string(cfg.future);
}

}  // namespace belieflab
