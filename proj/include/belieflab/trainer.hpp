#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "belieflab/config.hpp"
#include "belieflab/evaluation.hpp"
#include "belieflab/objectives.hpp"
#include "belieflab/replay.hpp"
#include "json.hpp"

namespace belieflab {

/// Independent random stream `stream` of a run seeded with `seed`.
Rng derive_rng(std::uint64_t seed, std::uint64_t stream);

struct UpdateStats {
  double loss = 0.0;
  ProbeLosses probe;
};

/// Background episode collection. Each worker keeps its own copy of the
/// representation, refreshed from the latest published parameters before each
/// episode, and waits so that collection never runs more than one episode per
/// `updates_per_episode` updates ahead of the trainer.
class ConcurrentCollector {
 public:
  ConcurrentCollector(const GridMap& map, const TrainConfig& cfg, ReplayBuffer& buffer, int workers,
                      std::uint64_t first_episode);
  ~ConcurrentCollector();
  ConcurrentCollector(const ConcurrentCollector&) = delete;
  ConcurrentCollector& operator=(const ConcurrentCollector&) = delete;

  void publish(const ParamSet& params, std::int64_t updates_done);
  void stop();
  std::uint64_t episodes_collected() const { return collected_.load(); }

 private:
  void run(int worker);

  const GridMap& map_;
  TrainConfig cfg_;
  ReplayBuffer& buffer_;
  std::uint64_t first_episode_;
  std::mutex mutex_;
  std::condition_variable cv_;
  std::shared_ptr<const ParamSet> snapshot_;
  std::int64_t updates_done_ = 0;
  std::uint64_t claimed_ = 0;
  std::atomic<std::uint64_t> collected_{0};
  bool stopping_ = false;
  std::vector<std::thread> threads_;
};

/// Owns one training run: map, representation, probes, replay and the fixed
/// held-out evaluation set.
class Trainer {
 public:
  explicit Trainer(TrainConfig cfg);
  ~Trainer();

  const TrainConfig& config() const { return cfg_; }
  const GridMap& map() const { return map_; }
  Representation& net() { return net_; }
  ProbeHeads& probes() { return probes_; }
  ReplayBuffer& buffer() { return buffer_; }
  std::int64_t update_step() const { return updates_; }
  std::uint64_t episodes_collected() const { return episodes_; }

  /// Collects `warmup_episodes` episodes with the current network.
  void warm_up();
  void collect(int episodes);
  /// One representation update and one probe update on the same batch. In
  /// single-threaded mode an episode is collected first every
  /// `updates_per_episode` updates.
  UpdateStats update();
  EvalReport evaluate();
  /// One metrics line. `train_loss` is the mean objective since the last
  /// record, absent at update 0.
  nlohmann::json metrics_record(const EvalReport& report, std::optional<double> train_loss) const;

  using Progress = std::function<void(const nlohmann::json&)>;
  /// Warm-up, then updates until `updates`, evaluating at update 0, every
  /// `eval_interval` and at the end. Writes metrics lines to `metrics` and,
  /// when `run_dir` is non-empty, checkpoints there. Returns the final report.
  EvalReport train(std::ostream* metrics, const std::string& run_dir = "", const Progress& progress = {});

  void save_checkpoint(const std::string& path) const;

  /// Reports emitted by train(), with their update steps.
  const std::vector<std::pair<std::int64_t, EvalReport>>& history() const { return history_; }

 private:
  void collect_one();

  TrainConfig cfg_;
  GridMap map_;
  Representation net_;
  ProbeHeads probes_;
  ReplayBuffer buffer_;
  nn::AdamOptions adam_;
  nn::AdamOptions probe_adam_;
  Rng env_rng_;
  Rng batch_rng_;
  Rng term_rng_;
  RandomRepeatPolicy policy_;
  std::optional<EvalSet> eval_set_;
  std::int64_t updates_ = 0;
  std::uint64_t episodes_ = 0;
  std::unique_ptr<ConcurrentCollector> collector_;
  std::vector<std::pair<std::int64_t, EvalReport>> history_;
};

/// A saved run: the config text plus representation and probe parameters.
struct RunCheckpoint {
  TrainConfig config;
  ParamSet representation;
  ParamSet pose;
  ParamSet past;
  ParamSet objects;
};

RunCheckpoint load_checkpoint(const std::string& path);
/// Rebuilds the network and probes of a checkpoint for `map`; shape
/// mismatches throw nn::CheckpointError.
void restore(const RunCheckpoint& ck, Representation& net, ProbeHeads& probes);

/// Sizes with the observation width that `cfg` implies.
ModelSizes model_sizes(const TrainConfig& cfg);

}  // namespace belieflab
