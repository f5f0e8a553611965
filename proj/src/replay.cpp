#include "belieflab/replay.hpp"

#include <stdexcept>

namespace belieflab {

std::pair<Action, int> RandomRepeatPolicy::sample_run() {
  std::uniform_int_distribution<int> action(0, kNumActions - 1);
  std::uniform_int_distribution<int> repeat(1, kMaxRepeat);
  const auto a = static_cast<Action>(action(rng_));
  return {a, repeat(rng_)};
}

Action RandomRepeatPolicy::next() {
  if (remaining_ == 0) std::tie(current_, remaining_) = sample_run();
  --remaining_;
  return current_;
}

std::vector<std::uint8_t> TrajectoryTruth::visited_at(const GridMap& map, std::size_t t) const {
  auto mask = visited_before;
  for (std::size_t i = 0; i <= t && i < poses.size(); ++i) mask[static_cast<std::size_t>(map.pose_index(poses[i]))] = 1;
  return mask;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
}

void ReplayBuffer::push(SubTrajectoryPtr item) {
  std::lock_guard lock(mutex_);
  items_.push_back(std::move(item));
  while (items_.size() > capacity_) items_.pop_front();
}

std::vector<SubTrajectoryPtr> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  std::lock_guard lock(mutex_);
  if (items_.size() < n || items_.empty()) {
    throw std::runtime_error("replay buffer holds " + std::to_string(items_.size()) + " sub-trajectories, need " +
                             std::to_string(n));
  }
  std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
  std::vector<SubTrajectoryPtr> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(items_[pick(rng)]);
  return out;
}

std::size_t ReplayBuffer::size() const {
  std::lock_guard lock(mutex_);
  return items_.size();
}

std::vector<SubTrajectoryPtr> ReplayBuffer::contents() const {
  std::lock_guard lock(mutex_);
  return {items_.begin(), items_.end()};
}

std::vector<SubTrajectory> collect_episode(const GridMap& map, Representation& net, RandomRepeatPolicy& policy,
                                           Rng& env_rng, const CollectOptions& opts, std::uint64_t episode_id) {
  if (opts.slice_length < 2) throw std::invalid_argument("slice length must be at least 2");
  if (opts.episode_length <= 0 || opts.episode_length % opts.slice_length != 0) {
    throw std::invalid_argument("episode length must be a positive multiple of the slice length");
  }
  const auto slices = static_cast<std::size_t>(opts.episode_length / opts.slice_length);
  const auto t_len = static_cast<std::size_t>(opts.slice_length);

  AgentState state = reset(map, env_rng);
  policy.reset();
  Matrix belief = Matrix::Zero(1, net.sizes().belief);
  int prev = kNullAction;
  std::vector<std::uint8_t> visited(static_cast<std::size_t>(map.pose_count()), 0);

  std::vector<SubTrajectory> out(slices);
  for (std::size_t s = 0; s < slices; ++s) {
    auto& sub = out[s];
    sub.episode = episode_id;
    sub.offset = static_cast<int>(s * t_len);
    sub.inputs.b0 = belief;
    sub.inputs.prev_action = prev;
    sub.truth.visited_before = visited;
    for (std::size_t t = 0; t < t_len; ++t) {
      const Observation obs = observe(map, state, opts.observation);
      sub.inputs.observations.push_back(obs);
      sub.truth.poses.push_back(state.pose);
      visited[static_cast<std::size_t>(map.pose_index(state.pose))] = 1;
      if (map.has_objects()) {
        std::vector<std::uint8_t> mask(static_cast<std::size_t>(map.free_count()), 0);
        for (const auto& c : state.objects) mask[static_cast<std::size_t>(map.free_index(c.x, c.y))] = 1;
        sub.truth.objects.push_back(std::move(mask));
      }
      belief = net.step_belief(belief, obs, prev);
      const Action a = policy.next();
      sub.inputs.actions.push_back(static_cast<int>(a));
      state = step(map, state, a);
      prev = static_cast<int>(a);
    }
  }
  return out;
}

}  // namespace belieflab
