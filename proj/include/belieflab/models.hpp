#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "belieflab/gridworld.hpp"
#include "belieflab/nn/layers.hpp"

namespace belieflab {

using nn::Matrix;
using nn::ParamSet;
using nn::Tape;
using nn::Var;

enum class Algo { FramePrediction, Cpc, CpcAction };

std::string_view algo_name(Algo a);
Algo parse_algo(std::string_view s);

struct ModelSizes {
  int observation = 2 * kPatchCells;
  int encoder_hidden = 64;
  int embedding = 64;   // Z
  int belief = 128;     // B
  int classifier_hidden = 128;
  int decoder_hidden = 128;
  int probe_hidden = 128;
};

/// Sentinel for "no previous action" at the start of an episode; encoded as
/// an all-zero one-hot.
inline constexpr int kNullAction = -1;

/// One-hot rows (N x 4); kNullAction rows stay zero.
Matrix one_hot_actions(std::span<const int> actions);

/// The representation being learned: encoder and belief GRU, plus the
/// objective-specific heads (action GRU and classifier for the contrastive
/// objectives, frame decoder for frame prediction). All parameters share one
/// ParamSet so a single Adam step updates everything the objective touches.
class Representation {
 public:
  Representation(Algo algo, const ModelSizes& sizes, std::uint64_t seed);

  Algo algo() const { return algo_; }
  const ModelSizes& sizes() const { return sizes_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }
  void set_params(ParamSet p);

  /// Observation features (n x obs) to embeddings (n x Z).
  Var encode(Tape& tape, Var observations);

  /// b_t = GRU(b_{t-1}, z_t ++ onehot(a_{t-1})) for t = 1..T over a batch of
  /// N sequences. `observations` is (T*N) x obs with row t*N + j holding
  /// o_{t+1} of sequence j; `prev_actions[t][j]` is a_{t} in the same
  /// shifted sense (kNullAction for the first step of an episode). `b0` is a
  /// constant. Also returns the embeddings used.
  struct Rollout {
    std::vector<Var> beliefs;  // T entries of N x B
    Var embeddings;            // (T*N) x Z
  };
  Rollout belief_rollout(Tape& tape, const Matrix& b0, Var observations,
                         const std::vector<std::vector<int>>& prev_actions);

  /// Runs the action GRU from each row of `beliefs` for actions[i].size()
  /// steps. Inputs are one-hot actions, or the constant zero vector when
  /// `use_actions` is false. Every row needs at least one step.
  Var forward_belief(Tape& tape, Var beliefs, const std::vector<std::vector<int>>& actions, bool use_actions);

  /// Contrastive discriminator logit for (forwarded belief, embedding) rows.
  Var classify(Tape& tape, Var forwarded, Var embeddings);

  /// Next-patch logits from (belief, onehot(action)).
  Var decode(Tape& tape, Var beliefs, const Matrix& action_one_hot);

  /// Single-sequence, no-gradient belief update used by collectors and
  /// evaluation.
  Matrix step_belief(const Matrix& belief, const Observation& obs, int prev_action);

  int decoder_outputs() const { return 2 * kPatchCells; }

 private:
  Algo algo_;
  ModelSizes sizes_;
  ParamSet params_;
  nn::Dense encoder_hidden_;
  nn::Dense encoder_out_;
  nn::GruCell belief_gru_;
  nn::GruCell action_gru_;
  nn::Mlp classifier_;
  nn::Mlp decoder_;
};

/// Ground-truth targets for one batch of probe inputs (rows match beliefs).
struct ProbeTargets {
  std::vector<int> pose;  // pose index per row
  Matrix past;            // rows x pose_count, 1 for visited poses
  Matrix objects;         // rows x free_count, empty when the map has none
};

struct ProbeLosses {
  double pose = 0.0;
  double past = 0.0;
  std::optional<double> objects;
};

/// Inspection-only readers of a belief vector. Each head owns its own
/// parameters and Adam state; none of them can reach the representation.
class ProbeHeads {
 public:
  ProbeHeads(const GridMap& map, const ModelSizes& sizes, std::uint64_t seed);

  ParamSet& pose_params() { return pose_params_; }
  ParamSet& past_params() { return past_params_; }
  ParamSet& object_params() { return object_params_; }
  const ParamSet& pose_params() const { return pose_params_; }
  const ParamSet& past_params() const { return past_params_; }
  const ParamSet& object_params() const { return object_params_; }
  bool has_object_head() const { return has_objects_; }
  /// Replaces head parameters from a checkpoint; names and shapes must match.
  void set_params(ParamSet pose, ParamSet past, ParamSet objects);
  int pose_count() const { return pose_count_; }

  /// One Adam step on each head. `beliefs` is a plain matrix, so no gradient
  /// path back into the representation exists.
  ProbeLosses update(const Matrix& beliefs, const ProbeTargets& targets, const nn::AdamOptions& adam);
  /// Losses without updating.
  ProbeLosses evaluate(const Matrix& beliefs, const ProbeTargets& targets);

  Matrix pose_logits(const Matrix& beliefs);
  /// Softmax over poses; each row sums to one.
  Matrix extract_belief(const Matrix& beliefs);
  Matrix past_probabilities(const Matrix& beliefs);
  Matrix object_probabilities(const Matrix& beliefs);

 private:
  void check_targets(const Matrix& beliefs, const ProbeTargets& targets) const;
  ProbeLosses run(const Matrix& beliefs, const ProbeTargets& targets, const nn::AdamOptions* adam);

  int pose_count_;
  int free_count_;
  bool has_objects_;
  ParamSet pose_params_;
  ParamSet past_params_;
  ParamSet object_params_;
  nn::Mlp pose_head_;
  nn::Mlp past_head_;
  nn::Mlp object_head_;
};

}  // namespace belieflab
