#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <vector>

#include "belieflab/gridworld.hpp"
#include "belieflab/models.hpp"

namespace belieflab {

/// Picks one of the four actions uniformly and repeats it k ~ U{1..5} times.
class RandomRepeatPolicy {
 public:
  static constexpr int kMaxRepeat = 5;

  explicit RandomRepeatPolicy(std::uint64_t seed) : rng_(seed) {}
  explicit RandomRepeatPolicy(Rng rng) : rng_(std::move(rng)) {}

  Action next();
  /// Draws a fresh (action, run length) pair; `next()` consumes these.
  std::pair<Action, int> sample_run();
  /// Forgets the current run so the next action starts a new one.
  void reset() { remaining_ = 0; }

 private:
  Rng rng_;
  Action current_ = Action::Forward;
  int remaining_ = 0;
};

/// What the representation is allowed to see.
struct TrajectoryInputs {
  std::vector<Observation> observations;  // o_1..o_T
  std::vector<int> actions;               // a_t taken after o_t
  int prev_action = kNullAction;          // action that led to o_1
  Matrix b0;                              // 1 x B recurrent state before o_1
};

/// Evaluation-only ground truth, kept in a separate struct so the training
/// objectives never receive it.
struct TrajectoryTruth {
  std::vector<Pose> poses;                      // pose at each observation
  std::vector<std::uint8_t> visited_before;     // pose mask before o_1
  std::vector<std::vector<std::uint8_t>> objects;  // per step, over free cells; empty without objects

  /// Visited-pose mask at step t (0-based), including the pose at t.
  std::vector<std::uint8_t> visited_at(const GridMap& map, std::size_t t) const;
};

struct SubTrajectory {
  TrajectoryInputs inputs;
  TrajectoryTruth truth;
  std::uint64_t episode = 0;
  int offset = 0;  // index of o_1 within the episode
  std::size_t length() const { return inputs.observations.size(); }
};

using SubTrajectoryPtr = std::shared_ptr<const SubTrajectory>;

/// FIFO store of sub-trajectories. push() and sample() are mutually atomic
/// so collector threads can push while the trainer samples.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(SubTrajectoryPtr item);
  /// N draws uniformly with replacement. Throws when fewer than N are stored.
  std::vector<SubTrajectoryPtr> sample(std::size_t n, Rng& rng) const;
  std::size_t size() const;
  std::size_t capacity() const { return capacity_; }
  /// Snapshot of the stored items, oldest first.
  std::vector<SubTrajectoryPtr> contents() const;

 private:
  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::deque<SubTrajectoryPtr> items_;
};

struct CollectOptions {
  int episode_length = 200;  // L
  int slice_length = 100;    // T
  ObservationOptions observation;
};

/// Rolls one episode from reset and cuts it into L / T slices, recording the
/// belief entering each slice. Beliefs are computed with `net` without
/// gradients.
std::vector<SubTrajectory> collect_episode(const GridMap& map, Representation& net, RandomRepeatPolicy& policy,
                                           Rng& env_rng, const CollectOptions& opts, std::uint64_t episode_id);

}  // namespace belieflab
