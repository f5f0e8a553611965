#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "belieflab/gridworld.hpp"
#include "belieflab/models.hpp"
#include "belieflab/oracle.hpp"

namespace belieflab {

/// One held-out episode with its exact posterior at every step.
struct EvalEpisode {
  std::vector<AgentState> states;          // state when o_t was observed
  std::vector<Observation> observations;   // o_1..o_L
  std::vector<int> actions;                // action taken after o_t
  std::vector<ExactBelief> oracle;         // posterior after o_t
};

struct EvalSetOptions {
  int episodes = 50;
  int episode_length = 200;
  std::uint64_t seed = 1;
  ObservationOptions observation;
};

/// Episodes drawn from their own random streams, so they never coincide with
/// training data and stay fixed across evaluations of one run.
struct EvalSet {
  std::vector<EvalEpisode> episodes;
  ObservationOptions observation;
};

EvalEpisode generate_eval_episode(const GridMap& map, Rng& env_rng, Rng& policy_rng, int length,
                                  const ObservationOptions& opts);
EvalSet make_eval_set(const GridMap& map, const EvalSetOptions& opts);

/// Split of a map into a west half (x < width / 2) and an east half, used to
/// measure corridor uncertainty on the two-hallways map.
struct RegionReport {
  double before_true = 0.0;   // mean probe mass in the true half before disambiguation
  double before_other = 0.0;  // ... and in the other half
  double after_true = 0.0;    // mean probe mass in the true half afterwards
  std::size_t before_steps = 0;
  std::size_t after_steps = 0;
  std::size_t episodes_resolved = 0;  // episodes whose oracle support left one half
};

struct EvalReport {
  double ce_pose = 0.0;
  double bce_past = 0.0;
  std::optional<double> bce_objects;
  double tv_oracle_mean = 0.0;
  double kl_oracle_mean = 0.0;
  double support_size_mean = 0.0;
  double oracle_ce = 0.0;  // mean ln support: the pose loss of the exact posterior
  double post_collapse_accuracy = 0.0;
  std::size_t post_collapse_steps = 0;
  bool support_monotone = true;

  // Means over episodes at each step index.
  std::vector<double> tv_curve;
  std::vector<double> ce_curve;
  std::vector<double> support_curve;

  std::optional<RegionReport> region;
};

/// Net beliefs for every step of every episode, rows ordered t * E + e.
Matrix eval_beliefs(Representation& net, const EvalSet& set);

/// Runs the representation from a zero state over each episode, reads it with
/// the probes and compares against the oracle. `region_split` enables the
/// half-map analysis.
EvalReport evaluate(const GridMap& map, Representation& net, ProbeHeads& probes, const EvalSet& set,
                    bool region_split = false);

/// Probe mass on the west half (x < width / 2) of a pose table.
double west_mass(const GridMap& map, std::span<const double> probs);

}  // namespace belieflab
