#pragma once

#include <span>
#include <vector>

#include "belieflab/models.hpp"
#include "belieflab/replay.hpp"

namespace belieflab {

/// A minibatch laid out time-major: row t*N + j belongs to sequence j at
/// step t (0-based), so one time step is a contiguous block of N rows.
struct Batch {
  std::size_t sequences = 0;  // N
  std::size_t steps = 0;      // T
  Matrix b0;                  // N x B
  Matrix observations;        // (T*N) x obs, o_{t+1}
  std::vector<std::vector<int>> prev_actions;  // [t][j] action that led to o_{t+1}
  std::vector<std::vector<int>> actions;       // [j][t] action taken after o_{t+1}

  /// Action leading out of belief row t (t = 0 is the stored b0).
  int action_after_belief(std::size_t j, std::size_t t) const { return prev_actions[t][j]; }
  Eigen::Index row(std::size_t j, std::size_t t) const { return static_cast<Eigen::Index>(t * sequences + j); }
};

Batch make_batch(std::span<const TrajectoryInputs* const> inputs);
Batch make_batch(std::span<const SubTrajectoryPtr> items);

/// One contrastive term: from the belief after `t` observations of sequence
/// `sequence` (t = 0 is b0), predict o_{t+offset} against one negative.
struct CpcTerm {
  int sequence = 0;
  int t = 0;
  int offset = 1;
  Eigen::Index negative_row = 0;  // row of the batch embedding matrix
};

struct CpcOptions {
  int future = 30;             // F
  bool use_actions = true;     // false gives plain CPC with a dummy input
  bool permissive_negatives = false;  // allow the positive itself as a negative
};

/// Draws f ~ U{1..F} (clamped to T - t) and one negative per term, for every
/// sequence j and t in [0, T). Draw order is (j, t, offset, negative).
std::vector<CpcTerm> plan_cpc_terms(const Batch& batch, const CpcOptions& opts, Rng& rng);

struct ObjectiveResult {
  double loss = 0.0;
  Matrix beliefs;  // (T*N) x B, values of b_1..b_T in batch row order
};

/// Mean over terms of l+ + l-, built on `tape`.
Var cpc_loss(Tape& tape, Representation& net, const Batch& batch, std::span<const CpcTerm> terms, bool use_actions,
             Matrix* beliefs_out = nullptr);
/// Mean sigmoid cross-entropy of decoder(b_t, a_t) against o_{t+1}, t in [0, T).
Var fp_loss(Tape& tape, Representation& net, const Batch& batch, Matrix* beliefs_out = nullptr);

/// Contrastive update: plans terms, builds the loss, one Adam step on every
/// representation parameter.
ObjectiveResult cpc_action_update(Representation& net, const Batch& batch, const CpcOptions& opts,
                                  const nn::AdamOptions& adam, Rng& rng);
ObjectiveResult fp_update(Representation& net, const Batch& batch, const nn::AdamOptions& adam);

/// Probe targets for every row of a batch, read from ground truth.
ProbeTargets make_probe_targets(const GridMap& map, std::span<const SubTrajectoryPtr> items);

}  // namespace belieflab
