#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "belieflab/gridworld.hpp"

namespace belieflab {

class ImpossibleObservation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Exact posterior over (free cell, orientation) poses, indexed like
/// `GridMap::pose_index`.
struct ExactBelief {
  std::vector<double> probs;

  std::size_t size() const { return probs.size(); }
  double operator[](std::size_t i) const { return probs[i]; }
};

/// Uniform over the map's start poses.
ExactBelief init_belief(const GridMap& map);

/// Bayes update on an observation without moving: drops poses whose patch
/// differs from `obs` and renormalises. Used for the first observation of an
/// episode.
///
/// For maps with objects the filter is conditioned on the true object layout
/// and start pose carried by `context`; only its pose-independent fields are
/// read.
ExactBelief condition(const ExactBelief& belief, const Observation& obs, const GridMap& map,
                      const AgentState& context = {}, const ObservationOptions& opts = {});

/// Push every support pose through the deterministic dynamics for `action`,
/// then condition on `obs`. `context` is the true state before the step.
ExactBelief filter_step(const ExactBelief& belief, Action action, const Observation& obs, const GridMap& map,
                        const AgentState& context = {}, const ObservationOptions& opts = {});

std::size_t support_size(const ExactBelief& belief);
std::vector<int> support(const ExactBelief& belief);

/// Half the L1 distance. `q` must sum to one within 1e-6.
double total_variation(const ExactBelief& p, std::span<const double> q);
/// KL(p || q) in nats, with q floored at 1e-12.
double kl_divergence(const ExactBelief& p, std::span<const double> q);

}  // namespace belieflab
