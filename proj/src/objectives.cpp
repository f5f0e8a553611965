#include "belieflab/objectives.hpp"

#include <algorithm>
#include <stdexcept>

namespace belieflab {

Batch make_batch(std::span<const TrajectoryInputs* const> inputs) {
  if (inputs.empty()) throw std::invalid_argument("empty batch");
  Batch b;
  b.sequences = inputs.size();
  b.steps = inputs.front()->observations.size();
  const auto belief_size = inputs.front()->b0.cols();
  const auto obs_size = static_cast<Eigen::Index>(inputs.front()->observations.front().features().size());
  b.b0.resize(static_cast<Eigen::Index>(b.sequences), belief_size);
  b.observations.resize(static_cast<Eigen::Index>(b.steps * b.sequences), obs_size);
  b.prev_actions.assign(b.steps, std::vector<int>(b.sequences, kNullAction));
  b.actions.assign(b.sequences, {});
  for (std::size_t j = 0; j < b.sequences; ++j) {
    const auto& in = *inputs[j];
    if (in.observations.size() != b.steps || in.actions.size() != b.steps) {
      throw std::invalid_argument("batch sequences must share one length");
    }
    if (in.b0.rows() != 1 || in.b0.cols() != belief_size) throw std::invalid_argument("stored b0 has the wrong size");
    b.b0.row(static_cast<Eigen::Index>(j)) = in.b0.row(0);
    for (std::size_t t = 0; t < b.steps; ++t) {
      const auto f = in.observations[t].features();
      b.observations.row(b.row(j, t)) = Eigen::Map<const Eigen::RowVectorXd>(f.data(), obs_size);
      b.prev_actions[t][j] = t == 0 ? in.prev_action : in.actions[t - 1];
    }
    b.actions[j] = in.actions;
  }
  return b;
}

Batch make_batch(std::span<const SubTrajectoryPtr> items) {
  std::vector<const TrajectoryInputs*> inputs;
  inputs.reserve(items.size());
  for (const auto& it : items) inputs.push_back(&it->inputs);
  return make_batch(inputs);
}

std::vector<CpcTerm> plan_cpc_terms(const Batch& batch, const CpcOptions& opts, Rng& rng) {
  if (opts.future < 1) throw std::invalid_argument("future length F must be at least 1");
  if (batch.steps < 2) throw std::invalid_argument("contrastive objective needs T >= 2");
  const auto rows = static_cast<Eigen::Index>(batch.steps * batch.sequences);
  std::uniform_int_distribution<int> offset(1, opts.future);
  std::vector<CpcTerm> terms;
  terms.reserve(batch.steps * batch.sequences);
  for (std::size_t j = 0; j < batch.sequences; ++j) {
    for (std::size_t t = 0; t < batch.steps; ++t) {
      CpcTerm term;
      term.sequence = static_cast<int>(j);
      term.t = static_cast<int>(t);
      term.offset = std::min(offset(rng), static_cast<int>(batch.steps - t));
      const Eigen::Index positive = batch.row(j, t + static_cast<std::size_t>(term.offset) - 1);
      if (opts.permissive_negatives) {
        term.negative_row = std::uniform_int_distribution<Eigen::Index>(0, rows - 1)(rng);
      } else {
        // Uniform over every other row: draw from rows - 1 and skip the positive.
        Eigen::Index r = std::uniform_int_distribution<Eigen::Index>(0, rows - 2)(rng);
        if (r >= positive) ++r;
        term.negative_row = r;
      }
      terms.push_back(term);
    }
  }
  return terms;
}

namespace {

// Rows t = 0..T-1 of the belief table: b0 followed by b_1..b_{T-1}.
Var belief_table(Tape& tape, const Batch& batch, const Representation::Rollout& roll) {
  std::vector<Var> parts;
  parts.reserve(batch.steps);
  parts.push_back(tape.constant(batch.b0));
  for (std::size_t t = 0; t + 1 < batch.steps; ++t) parts.push_back(roll.beliefs[t]);
  return nn::concat_rows(parts);
}

Matrix stacked_values(const Representation::Rollout& roll) {
  const auto n = roll.beliefs.front().rows();
  Matrix out(n * static_cast<Eigen::Index>(roll.beliefs.size()), roll.beliefs.front().cols());
  for (std::size_t t = 0; t < roll.beliefs.size(); ++t) {
    out.middleRows(static_cast<Eigen::Index>(t) * n, n) = roll.beliefs[t].value();
  }
  return out;
}

}  // namespace

Var cpc_loss(Tape& tape, Representation& net, const Batch& batch, std::span<const CpcTerm> terms, bool use_actions,
             Matrix* beliefs_out) {
  if (terms.empty()) throw std::invalid_argument("no contrastive terms");
  auto roll = net.belief_rollout(tape, batch.b0, tape.constant(batch.observations), batch.prev_actions);
  if (beliefs_out) *beliefs_out = stacked_values(roll);
  Var table = belief_table(tape, batch, roll);

  std::vector<int> source_rows;
  std::vector<int> positive_rows;
  std::vector<int> negative_rows;
  std::vector<std::vector<int>> actions;
  for (const auto& term : terms) {
    const auto j = static_cast<std::size_t>(term.sequence);
    const auto t = static_cast<std::size_t>(term.t);
    const auto f = static_cast<std::size_t>(term.offset);
    if (f < 1 || t + f > batch.steps) throw std::out_of_range("contrastive term reaches past the sub-trajectory");
    source_rows.push_back(static_cast<int>(batch.row(j, t)));
    positive_rows.push_back(static_cast<int>(batch.row(j, t + f - 1)));
    negative_rows.push_back(static_cast<int>(term.negative_row));
    std::vector<int> acts(f);
    for (std::size_t s = 0; s < f; ++s) acts[s] = batch.action_after_belief(j, t + s);
    actions.push_back(std::move(acts));
  }
  Var forwarded = net.forward_belief(tape, nn::gather_rows(table, source_rows), actions, use_actions);
  const Var both_b[] = {forwarded, forwarded};
  const Var both_z[] = {nn::gather_rows(roll.embeddings, positive_rows), nn::gather_rows(roll.embeddings, negative_rows)};
  Var logits = net.classify(tape, nn::concat_rows(both_b), nn::concat_rows(both_z));
  const auto m = static_cast<Eigen::Index>(terms.size());
  Matrix labels = Matrix::Zero(2 * m, 1);
  labels.topRows(m).setOnes();
  // sigmoid_ce averages over 2M logits; the loss is the mean of (l+ + l-).
  return nn::scale(nn::sigmoid_ce(logits, labels), 2.0);
}

Var fp_loss(Tape& tape, Representation& net, const Batch& batch, Matrix* beliefs_out) {
  if (batch.steps < 2) throw std::invalid_argument("frame prediction needs T >= 2");
  auto roll = net.belief_rollout(tape, batch.b0, tape.constant(batch.observations), batch.prev_actions);
  if (beliefs_out) *beliefs_out = stacked_values(roll);
  Var table = belief_table(tape, batch, roll);
  std::vector<int> acts;
  acts.reserve(batch.steps * batch.sequences);
  for (std::size_t t = 0; t < batch.steps; ++t) {
    for (std::size_t j = 0; j < batch.sequences; ++j) acts.push_back(batch.action_after_belief(j, t));
  }
  Var logits = net.decode(tape, table, one_hot_actions(acts));
  // Row t of the table predicts o_{t+1}, which is observation row t.
  Matrix targets = batch.observations.leftCols(net.decoder_outputs());
  return nn::sigmoid_ce(logits, targets);
}

ObjectiveResult cpc_action_update(Representation& net, const Batch& batch, const CpcOptions& opts,
                                  const nn::AdamOptions& adam, Rng& rng) {
  const auto terms = plan_cpc_terms(batch, opts, rng);
  ObjectiveResult out;
  net.params().zero_grad();
  Tape tape;
  Var loss = cpc_loss(tape, net, batch, terms, opts.use_actions, &out.beliefs);
  out.loss = loss.item();
  tape.backward(loss);
  nn::adam_step(net.params(), adam);
  return out;
}

ObjectiveResult fp_update(Representation& net, const Batch& batch, const nn::AdamOptions& adam) {
  ObjectiveResult out;
  net.params().zero_grad();
  Tape tape;
  Var loss = fp_loss(tape, net, batch, &out.beliefs);
  out.loss = loss.item();
  tape.backward(loss);
  nn::adam_step(net.params(), adam);
  return out;
}

ProbeTargets make_probe_targets(const GridMap& map, std::span<const SubTrajectoryPtr> items) {
  const std::size_t n = items.size();
  const std::size_t steps = items.front()->truth.poses.size();
  const auto rows = static_cast<Eigen::Index>(n * steps);
  ProbeTargets tg;
  tg.pose.assign(static_cast<std::size_t>(rows), 0);
  tg.past = Matrix::Zero(rows, map.pose_count());
  if (map.has_objects()) tg.objects = Matrix::Zero(rows, map.free_count());
  for (std::size_t j = 0; j < n; ++j) {
    const auto& truth = items[j]->truth;
    auto visited = truth.visited_before;
    for (std::size_t t = 0; t < steps; ++t) {
      const auto row = static_cast<Eigen::Index>(t * n + j);
      const int pose = map.pose_index(truth.poses[t]);
      visited[static_cast<std::size_t>(pose)] = 1;
      tg.pose[static_cast<std::size_t>(row)] = pose;
      for (std::size_t p = 0; p < visited.size(); ++p) {
        if (visited[p]) tg.past(row, static_cast<Eigen::Index>(p)) = 1.0;
      }
      if (map.has_objects()) {
        const auto& mask = truth.objects[t];
        for (std::size_t c = 0; c < mask.size(); ++c) {
          if (mask[c]) tg.objects(row, static_cast<Eigen::Index>(c)) = 1.0;
        }
      }
    }
  }
  return tg;
}

}  // namespace belieflab
