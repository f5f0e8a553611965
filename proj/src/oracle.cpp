#include "belieflab/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace belieflab {

namespace {

// Rescale to sum 1; for deterministic maps this also makes the support exactly uniform.
ExactBelief normalised(std::vector<double> mass) {
  const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
  if (total <= 0.0) throw ImpossibleObservation("observation is inconsistent with every pose in the belief");
  for (auto& m : mass) m /= total;
  return {std::move(mass)};
}

AgentState hypothesis(const Pose& pose, const AgentState& context) {
  AgentState s;
  s.pose = pose;
  s.start_pose = context.start_pose;
  s.objects = context.objects;
  return s;
}

}  // namespace

ExactBelief init_belief(const GridMap& map) {
  const auto starts = map.start_poses();
  if (starts.empty()) throw std::invalid_argument("map has no start poses");
  std::vector<double> probs(static_cast<std::size_t>(map.pose_count()), 0.0);
  const double p = 1.0 / static_cast<double>(starts.size());
  for (const auto& s : starts) probs[static_cast<std::size_t>(map.pose_index(s))] = p;
  return {std::move(probs)};
}

ExactBelief condition(const ExactBelief& belief, const Observation& obs, const GridMap& map,
                      const AgentState& context, const ObservationOptions& opts) {
  if (static_cast<int>(belief.size()) != map.pose_count()) throw std::invalid_argument("belief/map size mismatch");
  std::vector<double> mass(belief.size(), 0.0);
  for (std::size_t i = 0; i < belief.size(); ++i) {
    if (belief.probs[i] == 0.0) continue;
    const Pose p = map.pose_at(static_cast<int>(i));
    if (observe_at(map, p, context.objects, opts) == obs) mass[i] = belief.probs[i];
  }
  return normalised(std::move(mass));
}

ExactBelief filter_step(const ExactBelief& belief, Action action, const Observation& obs, const GridMap& map,
                        const AgentState& context, const ObservationOptions& opts) {
  if (static_cast<int>(belief.size()) != map.pose_count()) throw std::invalid_argument("belief/map size mismatch");
  std::vector<double> mass(belief.size(), 0.0);
  for (std::size_t i = 0; i < belief.size(); ++i) {
    if (belief.probs[i] == 0.0) continue;
    const Pose p = map.pose_at(static_cast<int>(i));
    if (map.has_objects()) {
      const AgentState next = step(map, hypothesis(p, context), action);
      if (observe(map, next, opts) == obs) mass[static_cast<std::size_t>(map.pose_index(next.pose))] += belief.probs[i];
    } else {
      const Pose next = step_pose(map, p, action);
      if (observe_at(map, next, {}, opts) == obs) {
        mass[static_cast<std::size_t>(map.pose_index(next))] += belief.probs[i];
      }
    }
  }
  return normalised(std::move(mass));
}

std::size_t support_size(const ExactBelief& belief) {
  return static_cast<std::size_t>(
      std::count_if(belief.probs.begin(), belief.probs.end(), [](double p) { return p > 0.0; }));
}

std::vector<int> support(const ExactBelief& belief) {
  std::vector<int> out;
  for (std::size_t i = 0; i < belief.size(); ++i) {
    if (belief.probs[i] > 0.0) out.push_back(static_cast<int>(i));
  }
  return out;
}

double total_variation(const ExactBelief& p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("total_variation: shape mismatch");
  const double qsum = std::accumulate(q.begin(), q.end(), 0.0);
  if (std::abs(qsum - 1.0) > 1e-6) throw std::invalid_argument("total_variation: q is not normalised");
  double acc = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) acc += std::abs(p.probs[i] - q[i]);
  return 0.5 * acc;
}

double kl_divergence(const ExactBelief& p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("kl_divergence: shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (p.probs[i] > 0.0) acc += p.probs[i] * (std::log(p.probs[i]) - std::log(std::max(q[i], 1e-12)));
  }
  return acc;
}

}  // namespace belieflab
