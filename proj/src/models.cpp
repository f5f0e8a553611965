#include "belieflab/models.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace belieflab {

std::string_view algo_name(Algo a) {
  switch (a) {
    case Algo::FramePrediction: return "fp";
    case Algo::Cpc: return "cpc";
    case Algo::CpcAction: return "cpc_action";
  }
  return "?";
}

Algo parse_algo(std::string_view s) {
  if (s == "fp") return Algo::FramePrediction;
  if (s == "cpc") return Algo::Cpc;
  if (s == "cpc_action") return Algo::CpcAction;
  throw std::invalid_argument("unknown algorithm '" + std::string(s) + "' (expected fp, cpc or cpc_action)");
}

Matrix one_hot_actions(std::span<const int> actions) {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(actions.size()), kNumActions);
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const int a = actions[i];
    if (a == kNullAction) continue;
    if (a < 0 || a >= kNumActions) throw std::out_of_range("action id out of range");
    m(static_cast<Eigen::Index>(i), a) = 1.0;
  }
  return m;
}

Representation::Representation(Algo algo, const ModelSizes& sizes, std::uint64_t seed) : algo_(algo), sizes_(sizes) {
  std::mt19937_64 rng(seed);
  encoder_hidden_ = nn::Dense::create(params_, "encoder.hidden", sizes.observation, sizes.encoder_hidden, rng);
  encoder_out_ = nn::Dense::create(params_, "encoder.out", sizes.encoder_hidden, sizes.embedding, rng);
  belief_gru_ = nn::GruCell::create(params_, "belief_gru", sizes.embedding + kNumActions, sizes.belief, rng);
  if (algo == Algo::FramePrediction) {
    decoder_ = nn::Mlp::create(params_, "decoder", sizes.belief + kNumActions, sizes.decoder_hidden,
                               2 * kPatchCells, rng);
  } else {
    action_gru_ = nn::GruCell::create(params_, "action_gru", kNumActions, sizes.belief, rng);
    classifier_ = nn::Mlp::create(params_, "classifier", sizes.belief + sizes.embedding, sizes.classifier_hidden, 1,
                                  rng);
  }
}

void Representation::set_params(ParamSet p) { nn::assign_checked(params_, std::move(p)); }

Var Representation::encode(Tape& tape, Var observations) {
  if (observations.cols() != sizes_.observation) throw std::invalid_argument("encode: observation width mismatch");
  return nn::relu(encoder_out_(tape, params_, nn::relu(encoder_hidden_(tape, params_, observations))));
}

Representation::Rollout Representation::belief_rollout(Tape& tape, const Matrix& b0, Var observations,
                                                       const std::vector<std::vector<int>>& prev_actions) {
  const auto n = b0.rows();
  const auto steps = static_cast<Eigen::Index>(prev_actions.size());
  if (b0.cols() != sizes_.belief) throw std::invalid_argument("belief_rollout: b0 width mismatch");
  if (steps == 0 || observations.rows() != steps * n) {
    throw std::invalid_argument("belief_rollout: observation and action sequences differ in length");
  }
  Rollout out;
  out.embeddings = encode(tape, observations);
  Var h = tape.constant(b0);
  for (Eigen::Index t = 0; t < steps; ++t) {
    const auto& acts = prev_actions[static_cast<std::size_t>(t)];
    if (static_cast<Eigen::Index>(acts.size()) != n) throw std::invalid_argument("belief_rollout: batch mismatch");
    const Var parts[] = {nn::slice_rows(out.embeddings, t * n, n), tape.constant(one_hot_actions(acts))};
    h = belief_gru_(tape, params_, nn::concat_cols(parts), h);
    out.beliefs.push_back(h);
  }
  return out;
}

Var Representation::forward_belief(Tape& tape, Var beliefs, const std::vector<std::vector<int>>& actions,
                                   bool use_actions) {
  if (algo_ == Algo::FramePrediction) throw std::logic_error("frame prediction has no action GRU");
  const auto m = beliefs.rows();
  if (static_cast<Eigen::Index>(actions.size()) != m) throw std::invalid_argument("forward_belief: row count");
  std::vector<int> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  for (const auto& a : actions) {
    if (a.empty()) throw std::invalid_argument("forward_belief: at least one step is required");
  }
  // Longest first, so the rows still running at any step are a prefix.
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return actions[a].size() > actions[b].size(); });
  Var h = nn::gather_rows(beliefs, order);
  const std::size_t longest = actions[static_cast<std::size_t>(order.front())].size();
  std::vector<int> step_actions;
  for (std::size_t s = 0; s < longest; ++s) {
    Eigen::Index active = 0;
    while (active < m && actions[static_cast<std::size_t>(order[static_cast<std::size_t>(active)])].size() > s) ++active;
    Matrix input = Matrix::Zero(active, kNumActions);
    if (use_actions) {
      step_actions.clear();
      for (Eigen::Index i = 0; i < active; ++i) {
        step_actions.push_back(actions[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])][s]);
      }
      input = one_hot_actions(step_actions);
    }
    Var top = action_gru_(tape, params_, tape.constant(std::move(input)), nn::slice_rows(h, 0, active));
    if (active == m) {
      h = top;
    } else {
      const Var parts[] = {top, nn::slice_rows(h, active, m - active)};
      h = nn::concat_rows(parts);
    }
  }
  std::vector<int> inverse(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) inverse[static_cast<std::size_t>(order[i])] = static_cast<int>(i);
  return nn::gather_rows(h, inverse);
}

Var Representation::classify(Tape& tape, Var forwarded, Var embeddings) {
  if (algo_ == Algo::FramePrediction) throw std::logic_error("frame prediction has no classifier");
  const Var parts[] = {forwarded, embeddings};
  return classifier_(tape, params_, nn::concat_cols(parts));
}

Var Representation::decode(Tape& tape, Var beliefs, const Matrix& action_one_hot) {
  if (algo_ != Algo::FramePrediction) throw std::logic_error("only frame prediction has a decoder");
  const Var parts[] = {beliefs, tape.constant(action_one_hot)};
  return decoder_(tape, params_, nn::concat_cols(parts));
}

Matrix Representation::step_belief(const Matrix& belief, const Observation& obs, int prev_action) {
  Tape tape(false);
  const auto f = obs.features();
  if (static_cast<int>(f.size()) != sizes_.observation) throw std::invalid_argument("step_belief: observation size");
  Matrix row = Eigen::Map<const Matrix>(f.data(), 1, static_cast<Eigen::Index>(f.size()));
  const int acts[] = {prev_action};
  const Var parts[] = {encode(tape, tape.constant(std::move(row))), tape.constant(one_hot_actions(acts))};
  return belief_gru_(tape, params_, nn::concat_cols(parts), tape.constant(belief)).value();
}

ProbeHeads::ProbeHeads(const GridMap& map, const ModelSizes& sizes, std::uint64_t seed)
    : pose_count_(map.pose_count()), free_count_(map.free_count()), has_objects_(map.has_objects()) {
  std::mt19937_64 rng(seed);
  pose_head_ = nn::Mlp::create(pose_params_, "pose", sizes.belief, sizes.probe_hidden, pose_count_, rng);
  past_head_ = nn::Mlp::create(past_params_, "past", sizes.belief, sizes.probe_hidden, pose_count_, rng);
  if (has_objects_) {
    object_head_ = nn::Mlp::create(object_params_, "objects", sizes.belief, sizes.probe_hidden, free_count_, rng);
  }
}

void ProbeHeads::check_targets(const Matrix& beliefs, const ProbeTargets& targets) const {
  const auto rows = beliefs.rows();
  if (static_cast<Eigen::Index>(targets.pose.size()) != rows || targets.past.rows() != rows ||
      targets.past.cols() != pose_count_) {
    throw std::invalid_argument("probe targets do not match the belief batch");
  }
  for (int p : targets.pose) {
    if (p < 0 || p >= pose_count_) throw std::out_of_range("probe target outside the free cells");
  }
  if (has_objects_ && (targets.objects.rows() != rows || targets.objects.cols() != free_count_)) {
    throw std::invalid_argument("object targets do not match the belief batch");
  }
}

ProbeLosses ProbeHeads::run(const Matrix& beliefs, const ProbeTargets& targets, const nn::AdamOptions* adam) {
  check_targets(beliefs, targets);
  ProbeLosses out;
  {
    Tape tape(adam != nullptr);
    Var loss = nn::softmax_ce(pose_head_(tape, pose_params_, tape.constant(beliefs)), targets.pose);
    out.pose = loss.item();
    if (adam) {
      tape.backward(loss);
      nn::adam_step(pose_params_, *adam);
    }
  }
  {
    Tape tape(adam != nullptr);
    Var loss = nn::sigmoid_ce(past_head_(tape, past_params_, tape.constant(beliefs)), targets.past);
    out.past = loss.item();
    if (adam) {
      tape.backward(loss);
      nn::adam_step(past_params_, *adam);
    }
  }
  if (has_objects_) {
    Tape tape(adam != nullptr);
    Var loss = nn::sigmoid_ce(object_head_(tape, object_params_, tape.constant(beliefs)), targets.objects);
    out.objects = loss.item();
    if (adam) {
      tape.backward(loss);
      nn::adam_step(object_params_, *adam);
    }
  }
  return out;
}

ProbeLosses ProbeHeads::update(const Matrix& beliefs, const ProbeTargets& targets, const nn::AdamOptions& adam) {
  return run(beliefs, targets, &adam);
}

ProbeLosses ProbeHeads::evaluate(const Matrix& beliefs, const ProbeTargets& targets) {
  return run(beliefs, targets, nullptr);
}

void ProbeHeads::set_params(ParamSet pose, ParamSet past, ParamSet objects) {
  nn::assign_checked(pose_params_, std::move(pose));
  nn::assign_checked(past_params_, std::move(past));
  nn::assign_checked(object_params_, std::move(objects));
}

Matrix ProbeHeads::pose_logits(const Matrix& beliefs) {
  Tape tape(false);
  return pose_head_(tape, pose_params_, tape.constant(beliefs)).value();
}

Matrix ProbeHeads::extract_belief(const Matrix& beliefs) { return nn::softmax_rows(pose_logits(beliefs)); }

Matrix ProbeHeads::past_probabilities(const Matrix& beliefs) {
  Tape tape(false);
  return nn::sigmoid_values(past_head_(tape, past_params_, tape.constant(beliefs)).value());
}

Matrix ProbeHeads::object_probabilities(const Matrix& beliefs) {
  if (!has_objects_) return {};
  Tape tape(false);
  return nn::sigmoid_values(object_head_(tape, object_params_, tape.constant(beliefs)).value());
}

}  // namespace belieflab
