#include "belieflab/evaluation.hpp"

#include <algorithm>
#include <cmath>

#include "belieflab/replay.hpp"

namespace belieflab {

EvalEpisode generate_eval_episode(const GridMap& map, Rng& env_rng, Rng& policy_rng, int length,
                                  const ObservationOptions& opts) {
  EvalEpisode ep;
  RandomRepeatPolicy policy(policy_rng());
  AgentState state = reset(map, env_rng);
  ExactBelief belief = init_belief(map);
  for (int t = 0; t < length; ++t) {
    const Observation obs = observe(map, state, opts);
    if (t == 0) {
      belief = condition(belief, obs, map, state, opts);
    } else {
      belief = filter_step(belief, static_cast<Action>(ep.actions.back()), obs, map, ep.states.back(), opts);
    }
    ep.states.push_back(state);
    ep.observations.push_back(obs);
    ep.oracle.push_back(belief);
    const Action a = policy.next();
    ep.actions.push_back(static_cast<int>(a));
    state = step(map, state, a);
  }
  return ep;
}

EvalSet make_eval_set(const GridMap& map, const EvalSetOptions& opts) {
  EvalSet set;
  set.observation = opts.observation;
  Rng master(opts.seed);
  for (int e = 0; e < opts.episodes; ++e) {
    Rng env_rng(master());
    Rng policy_rng(master());
    set.episodes.push_back(generate_eval_episode(map, env_rng, policy_rng, opts.episode_length, opts.observation));
  }
  return set;
}

Matrix eval_beliefs(Representation& net, const EvalSet& set) {
  const auto n = set.episodes.size();
  const auto steps = set.episodes.front().observations.size();
  const auto obs_size = static_cast<Eigen::Index>(set.episodes.front().observations.front().features().size());
  Matrix observations(static_cast<Eigen::Index>(n * steps), obs_size);
  std::vector<std::vector<int>> prev(steps, std::vector<int>(n, kNullAction));
  for (std::size_t e = 0; e < n; ++e) {
    const auto& ep = set.episodes[e];
    for (std::size_t t = 0; t < steps; ++t) {
      const auto f = ep.observations[t].features();
      observations.row(static_cast<Eigen::Index>(t * n + e)) = Eigen::Map<const Eigen::RowVectorXd>(f.data(), obs_size);
      if (t > 0) prev[t][e] = ep.actions[t - 1];
    }
  }
  Tape tape(false);
  const Matrix b0 = Matrix::Zero(static_cast<Eigen::Index>(n), net.sizes().belief);
  auto roll = net.belief_rollout(tape, b0, tape.constant(std::move(observations)), prev);
  Matrix out(static_cast<Eigen::Index>(n * steps), net.sizes().belief);
  for (std::size_t t = 0; t < steps; ++t) {
    out.middleRows(static_cast<Eigen::Index>(t * n), static_cast<Eigen::Index>(n)) = roll.beliefs[t].value();
  }
  return out;
}

double west_mass(const GridMap& map, std::span<const double> probs) {
  double m = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (map.pose_at(static_cast<int>(i)).x < map.width() / 2) m += probs[i];
  }
  return m;
}

EvalReport evaluate(const GridMap& map, Representation& net, ProbeHeads& probes, const EvalSet& set,
                    bool region_split) {
  if (set.episodes.empty()) throw std::invalid_argument("empty evaluation set");
  const auto n = set.episodes.size();
  const auto steps = set.episodes.front().observations.size();
  const auto rows = static_cast<Eigen::Index>(n * steps);
  const Matrix beliefs = eval_beliefs(net, set);

  ProbeTargets targets;
  targets.pose.assign(static_cast<std::size_t>(rows), 0);
  targets.past = Matrix::Zero(rows, map.pose_count());
  if (map.has_objects()) targets.objects = Matrix::Zero(rows, map.free_count());
  for (std::size_t e = 0; e < n; ++e) {
    const auto& ep = set.episodes[e];
    std::vector<std::uint8_t> visited(static_cast<std::size_t>(map.pose_count()), 0);
    for (std::size_t t = 0; t < steps; ++t) {
      const auto row = static_cast<Eigen::Index>(t * n + e);
      const int pose = map.pose_index(ep.states[t].pose);
      visited[static_cast<std::size_t>(pose)] = 1;
      targets.pose[static_cast<std::size_t>(row)] = pose;
      for (std::size_t p = 0; p < visited.size(); ++p) {
        if (visited[p]) targets.past(row, static_cast<Eigen::Index>(p)) = 1.0;
      }
      if (map.has_objects()) {
        for (const auto& c : ep.states[t].objects) targets.objects(row, map.free_index(c.x, c.y)) = 1.0;
      }
    }
  }

  EvalReport r;
  const ProbeLosses losses = probes.evaluate(beliefs, targets);
  r.ce_pose = losses.pose;
  r.bce_past = losses.past;
  r.bce_objects = losses.objects;

  const Matrix probs = probes.extract_belief(beliefs);
  r.tv_curve.assign(steps, 0.0);
  r.ce_curve.assign(steps, 0.0);
  r.support_curve.assign(steps, 0.0);
  std::size_t correct = 0;
  RegionReport region;
  for (std::size_t e = 0; e < n; ++e) {
    const auto& ep = set.episodes[e];
    std::size_t last_support = 0;
    bool resolved = false;
    for (std::size_t t = 0; t < steps; ++t) {
      const auto row = static_cast<Eigen::Index>(t * n + e);
      const std::span<const double> q(probs.row(row).data(), static_cast<std::size_t>(probs.cols()));
      const auto& oracle = ep.oracle[t];
      const int pose = targets.pose[static_cast<std::size_t>(row)];
      const double tv = total_variation(oracle, q);
      const double ce = -std::log(std::max(q[static_cast<std::size_t>(pose)], 1e-300));
      const auto support = support_size(oracle);
      r.tv_curve[t] += tv;
      r.ce_curve[t] += ce;
      r.support_curve[t] += static_cast<double>(support);
      r.kl_oracle_mean += kl_divergence(oracle, q);
      r.oracle_ce += std::log(static_cast<double>(support));
      if (t > 0 && support > last_support) r.support_monotone = false;
      last_support = support;
      if (support == 1) {
        ++r.post_collapse_steps;
        Eigen::Index best = 0;
        probs.row(row).maxCoeff(&best);
        if (best == pose) ++correct;
      }
      if (region_split) {
        const bool true_west = ep.states[t].pose.x < map.width() / 2;
        const double oracle_west = west_mass(map, oracle.probs);
        const double oracle_true = true_west ? oracle_west : 1.0 - oracle_west;
        if (!resolved && oracle_true >= 1.0 - 1e-12) {
          resolved = true;
          ++region.episodes_resolved;
        }
        const double w = west_mass(map, q);
        const double mass_true = true_west ? w : 1.0 - w;
        if (resolved) {
          region.after_true += mass_true;
          ++region.after_steps;
        } else {
          region.before_true += mass_true;
          region.before_other += 1.0 - mass_true;
          ++region.before_steps;
        }
      }
    }
  }
  const auto total = static_cast<double>(rows);
  double tv_sum = 0.0;
  double support_sum = 0.0;
  for (std::size_t t = 0; t < steps; ++t) {
    tv_sum += r.tv_curve[t];
    support_sum += r.support_curve[t];
    r.tv_curve[t] /= static_cast<double>(n);
    r.ce_curve[t] /= static_cast<double>(n);
    r.support_curve[t] /= static_cast<double>(n);
  }
  r.tv_oracle_mean = tv_sum / total;
  r.support_size_mean = support_sum / total;
  r.kl_oracle_mean /= total;
  r.oracle_ce /= total;
  r.post_collapse_accuracy =
      r.post_collapse_steps > 0 ? static_cast<double>(correct) / static_cast<double>(r.post_collapse_steps) : 0.0;
  if (region_split) {
    if (region.before_steps > 0) {
      region.before_true /= static_cast<double>(region.before_steps);
      region.before_other /= static_cast<double>(region.before_steps);
    }
    if (region.after_steps > 0) region.after_true /= static_cast<double>(region.after_steps);
    r.region = region;
  }
  return r;
}

}  // namespace belieflab
