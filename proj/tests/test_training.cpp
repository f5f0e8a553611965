#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <map>
#include <sstream>
#include <thread>

#include "belieflab/experiments.hpp"
#include "belieflab/nce.hpp"
#include "belieflab/render.hpp"
#include "belieflab/trainer.hpp"

using namespace belieflab;
namespace fs = std::filesystem;

namespace {

TrainConfig smoke(std::string env = "room9", Algo algo = Algo::CpcAction) {
  TrainConfig cfg = config_preset("smoke");
  cfg.env = std::move(env);
  cfg.algo = algo;
  return cfg;
}

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("belieflab_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<double> row_vector(const Matrix& m, Eigen::Index r) {
  return {m.row(r).data(), m.row(r).data() + m.cols()};
}

}  // namespace

// ---- policy and replay -----------------------------------------------------------

TEST(Policy, RunLengthsAndActionsAreUniform) {
  RandomRepeatPolicy policy(3);
  std::map<int, int> lengths, actions;
  const int runs = 50000;
  for (int i = 0; i < runs; ++i) {
    const auto [a, k] = policy.sample_run();
    ++lengths[k];
    ++actions[static_cast<int>(a)];
  }
  ASSERT_EQ(lengths.size(), 5u);
  ASSERT_EQ(actions.size(), 4u);
  double chi_len = 0.0, chi_act = 0.0;
  for (const auto& [k, c] : lengths) chi_len += std::pow(c - runs / 5.0, 2) / (runs / 5.0);
  for (const auto& [a, c] : actions) chi_act += std::pow(c - runs / 4.0, 2) / (runs / 4.0);
  EXPECT_LT(chi_len, 20.0);
  EXPECT_LT(chi_act, 20.0);
}

TEST(Policy, NextRepeatsEachRun) {
  RandomRepeatPolicy a(8), b(8);
  std::vector<Action> expanded;
  while (expanded.size() < 200) {
    const auto [act, k] = b.sample_run();
    for (int i = 0; i < k; ++i) expanded.push_back(act);
  }
  for (std::size_t i = 0; i < 200; ++i) ASSERT_EQ(a.next(), expanded[i]);
}

TEST(Replay, EvictsOldestFirst) {
  ReplayBuffer buf(3);
  for (int i = 0; i < 5; ++i) {
    auto s = std::make_shared<SubTrajectory>();
    s->episode = static_cast<std::uint64_t>(i);
    buf.push(s);
  }
  const auto items = buf.contents();
  ASSERT_EQ(items.size(), 3u);
  EXPECT_EQ(items[0]->episode, 2u);
  EXPECT_EQ(items[2]->episode, 4u);
}

TEST(Replay, SamplingNeedsEnoughItems) {
  ReplayBuffer buf(10);
  buf.push(std::make_shared<SubTrajectory>());
  Rng rng(1);
  EXPECT_THROW(buf.sample(2, rng), std::runtime_error);
  EXPECT_EQ(buf.sample(1, rng).size(), 1u);
  EXPECT_THROW(ReplayBuffer(0), std::invalid_argument);
}

TEST(Replay, SamplingIsUniformWithReplacement) {
  ReplayBuffer buf(4);
  for (int i = 0; i < 4; ++i) {
    auto s = std::make_shared<SubTrajectory>();
    s->episode = static_cast<std::uint64_t>(i);
    buf.push(s);
  }
  Rng rng(2);
  std::map<std::uint64_t, int> counts;
  for (int i = 0; i < 4000; ++i) {
    for (const auto& s : buf.sample(4, rng)) ++counts[s->episode];
  }
  // 16000 draws over 4 items; sd of a count is about 55.
  for (const auto& [_, c] : counts) EXPECT_NEAR(c, 4000, 300);
}

TEST(Replay, ConcurrentPushAndSample) {
  ReplayBuffer buf(64);
  buf.push(std::make_shared<SubTrajectory>());
  std::vector<std::thread> writers;
  for (int w = 0; w < 4; ++w) {
    writers.emplace_back([&] {
      for (int i = 0; i < 2000; ++i) buf.push(std::make_shared<SubTrajectory>());
    });
  }
  Rng rng(1);
  std::size_t drawn = 0;
  for (int i = 0; i < 2000; ++i) drawn += buf.sample(1, rng).size();
  for (auto& t : writers) t.join();
  EXPECT_EQ(drawn, 2000u);
  EXPECT_EQ(buf.size(), 64u);
}

TEST(Collect, SlicesCarryTheRunningBelief) {
  const auto map = preset_map("teleport");
  ModelSizes sizes;
  sizes.encoder_hidden = 8;
  sizes.embedding = 6;
  sizes.belief = 10;
  Representation net(Algo::CpcAction, sizes, 4);
  RandomRepeatPolicy policy(5);
  Rng env(6);
  CollectOptions opts;
  opts.episode_length = 30;
  opts.slice_length = 10;
  const auto subs = collect_episode(map, net, policy, env, opts, 77);
  ASSERT_EQ(subs.size(), 3u);
  EXPECT_TRUE(subs[0].inputs.b0.isZero());
  EXPECT_EQ(subs[0].inputs.prev_action, kNullAction);

  // Replay the same episode from the same seeds and rebuild everything.
  Rng env2(6);
  RandomRepeatPolicy policy2(5);
  AgentState s = reset(map, env2);
  Matrix b = Matrix::Zero(1, sizes.belief);
  int prev = kNullAction;
  for (std::size_t k = 0; k < subs.size(); ++k) {
    const auto& sub = subs[k];
    EXPECT_EQ(sub.episode, 77u);
    EXPECT_EQ(sub.offset, static_cast<int>(k * 10));
    EXPECT_EQ(sub.inputs.prev_action, prev);
    EXPECT_TRUE(sub.inputs.b0.isApprox(b, 1e-14) || (b.isZero() && sub.inputs.b0.isZero()));
    ASSERT_EQ(sub.length(), 10u);
    for (std::size_t t = 0; t < 10; ++t) {
      EXPECT_EQ(sub.inputs.observations[t], observe(map, s));
      EXPECT_EQ(sub.truth.poses[t], s.pose);
      int objects = 0;
      for (auto m : sub.truth.objects[t]) objects += m;
      EXPECT_EQ(objects, static_cast<int>(s.objects.size()));
      b = net.step_belief(b, sub.inputs.observations[t], prev);
      const Action a = policy2.next();
      EXPECT_EQ(sub.inputs.actions[t], static_cast<int>(a));
      s = step(map, s, a);
      prev = static_cast<int>(a);
    }
  }
}

TEST(Collect, RejectsRaggedSlicing) {
  const auto map = preset_map("room9");
  Representation net(Algo::CpcAction, {}, 1);
  RandomRepeatPolicy policy(1);
  Rng env(1);
  CollectOptions opts;
  opts.episode_length = 25;
  opts.slice_length = 10;
  EXPECT_THROW(collect_episode(map, net, policy, env, opts, 0), std::invalid_argument);
}

TEST(ProbeTargetsTest, PastMaskAccumulatesAcrossSlices) {
  const auto map = preset_map("room9");
  auto sub = std::make_shared<SubTrajectory>();
  sub->truth.visited_before.assign(static_cast<std::size_t>(map.pose_count()), 0);
  sub->truth.visited_before[0] = 1;
  sub->truth.poses = {{2, 2, Orientation::North}, {2, 2, Orientation::East}};
  const std::vector<SubTrajectoryPtr> items{sub};
  const auto tg = make_probe_targets(map, items);
  EXPECT_EQ(tg.pose[0], map.pose_index({2, 2, Orientation::North}));
  EXPECT_EQ(tg.past.row(0).sum(), 2.0);
  EXPECT_EQ(tg.past.row(1).sum(), 3.0);
  EXPECT_EQ(tg.past(1, 0), 1.0);
  EXPECT_EQ(tg.objects.size(), 0);
}

// ---- configuration ----------------------------------------------------------

TEST(Config, TextRoundTrip) {
  for (const auto& name : config_preset_names()) {
    TrainConfig cfg = config_preset(name);
    cfg.env = "two_hallways";
    cfg.future = 7;
    cfg.egocentric = true;
    const TrainConfig back = parse_config(to_text(cfg));
    EXPECT_EQ(to_text(back), to_text(cfg));
  }
}

TEST(Config, PresetLineMustComeFirst) {
  EXPECT_EQ(parse_config("preset = smoke\nseed = 4\n").updates, config_preset("smoke").updates);
  EXPECT_EQ(parse_config("preset = smoke\nseed = 4\n").seed, 4u);
  EXPECT_THROW(parse_config("seed = 4\npreset = smoke\n"), ConfigError);
}

TEST(Config, BadInputIsRejected) {
  EXPECT_THROW(parse_config("bogus = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("N = many\n"), ConfigError);
  EXPECT_THROW(parse_config("just words\n"), ConfigError);
  EXPECT_THROW(parse_config("algo = dqn\n"), ConfigError);
  EXPECT_EQ(parse_config("# comment\n\nN = 8 # trailing\n").batch, 8);
}

TEST(Config, Validation) {
  TrainConfig cfg = smoke();
  EXPECT_TRUE(validate(cfg).empty());
  cfg.episode_length = 25;
  EXPECT_THROW(validate(cfg), ConfigError);
  cfg = smoke();
  cfg.future = 0;
  EXPECT_THROW(validate(cfg), ConfigError);
  cfg = smoke();
  cfg.capacity = 1;
  EXPECT_THROW(validate(cfg), ConfigError);
  cfg = smoke(), cfg.future = 50;
  EXPECT_EQ(validate(cfg).size(), 1u);
  cfg = smoke("room9", Algo::FramePrediction);
  apply_setting(cfg, "F", "7");
  const auto w = validate(cfg);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_EQ(w[0], "F = 7 is ignored by fp");
}

TEST(Config, RunLabels) {
  TrainConfig cfg = smoke();
  cfg.future = 30;
  EXPECT_EQ(run_label(cfg), "cpc_action_30");
  cfg.algo = Algo::Cpc;
  cfg.future = 1;
  EXPECT_EQ(run_label(cfg), "cpc_1");
  cfg.algo = Algo::FramePrediction;
  EXPECT_EQ(run_label(cfg), "fp");
  EXPECT_EQ(algorithm_label(Algo::CpcAction, 30), "CPC|Action 30");
  EXPECT_EQ(algorithm_label(Algo::FramePrediction, 30), "FP");
}

TEST(Config, DerivedStreamsAreIndependentAndRepeatable) {
  Rng a = derive_rng(1, 3), b = derive_rng(1, 3), c = derive_rng(1, 4), d = derive_rng(2, 3);
  const auto x = a();
  EXPECT_EQ(x, b());
  EXPECT_NE(x, c());
  EXPECT_NE(x, d());
}

// ---- evaluation ------------------------------------------------------------------

TEST(Evaluation, EvalSetCarriesTheExactFilter) {
  const auto map = preset_map("room9");
  EvalSetOptions o;
  o.episodes = 4;
  o.episode_length = 60;
  o.seed = 9;
  const auto set = make_eval_set(map, o);
  ASSERT_EQ(set.episodes.size(), 4u);
  for (const auto& ep : set.episodes) {
    ASSERT_EQ(ep.oracle.size(), 60u);
    ExactBelief b = condition(init_belief(map), ep.observations[0], map);
    for (std::size_t t = 0; t < 60; ++t) {
      if (t > 0) b = filter_step(b, static_cast<Action>(ep.actions[t - 1]), ep.observations[t], map);
      EXPECT_EQ(b.probs, ep.oracle[t].probs);
      EXPECT_EQ(ep.observations[t], observe(map, ep.states[t]));
      if (t > 0) EXPECT_EQ(ep.states[t].pose, step_pose(map, ep.states[t - 1].pose, static_cast<Action>(ep.actions[t - 1])));
    }
  }
  const auto again = make_eval_set(map, o);
  EXPECT_EQ(again.episodes[3].actions, set.episodes[3].actions);
}

TEST(Evaluation, ReportAgreesWithDirectComputation) {
  const auto map = preset_map("two_hallways");
  ModelSizes sizes;
  sizes.encoder_hidden = 8;
  sizes.embedding = 6;
  sizes.belief = 10;
  sizes.probe_hidden = 12;
  Representation net(Algo::CpcAction, sizes, 4);
  ProbeHeads probes(map, sizes, 5);
  EvalSetOptions o;
  o.episodes = 3;
  o.episode_length = 25;
  const auto set = make_eval_set(map, o);
  const auto r = evaluate(map, net, probes, set, true);

  double tv = 0.0, ce = 0.0, oracle_ce = 0.0, support = 0.0;
  std::size_t collapsed = 0, correct = 0;
  for (std::size_t e = 0; e < set.episodes.size(); ++e) {
    const auto& ep = set.episodes[e];
    Matrix b = Matrix::Zero(1, sizes.belief);
    for (std::size_t t = 0; t < ep.observations.size(); ++t) {
      b = net.step_belief(b, ep.observations[t], t == 0 ? kNullAction : ep.actions[t - 1]);
      const auto q = row_vector(probes.extract_belief(b), 0);
      const auto& p = ep.oracle[t].probs;
      double l1 = 0.0;
      for (std::size_t i = 0; i < q.size(); ++i) l1 += std::abs(p[i] - q[i]);
      tv += 0.5 * l1;
      const auto truth = static_cast<std::size_t>(map.pose_index(ep.states[t].pose));
      ce -= std::log(q[truth]);
      const auto s = support_size(ep.oracle[t]);
      support += static_cast<double>(s);
      oracle_ce += std::log(static_cast<double>(s));
      if (s == 1) {
        ++collapsed;
        correct += static_cast<std::size_t>(std::max_element(q.begin(), q.end()) - q.begin()) == truth;
      }
    }
  }
  const double rows = 75.0;
  EXPECT_NEAR(r.tv_oracle_mean, tv / rows, 1e-10);
  EXPECT_NEAR(r.ce_pose, ce / rows, 1e-10);
  EXPECT_NEAR(r.oracle_ce, oracle_ce / rows, 1e-12);
  EXPECT_NEAR(r.support_size_mean, support / rows, 1e-12);
  EXPECT_EQ(r.post_collapse_steps, collapsed);
  EXPECT_NEAR(r.post_collapse_accuracy, collapsed ? static_cast<double>(correct) / collapsed : 0.0, 1e-12);
  EXPECT_TRUE(r.support_monotone);
  ASSERT_TRUE(r.region.has_value());
  EXPECT_NEAR(r.region->before_true + r.region->before_other, 1.0, 1e-9);
  EXPECT_EQ(r.region->before_steps + r.region->after_steps, 75u);
}

TEST(Evaluation, WestMassSplitsTheMap) {
  const auto map = preset_map("two_hallways");
  std::vector<double> p(static_cast<std::size_t>(map.pose_count()), 0.0);
  p[static_cast<std::size_t>(map.pose_index({1, 5, Orientation::North}))] = 0.25;
  p[static_cast<std::size_t>(map.pose_index({6, 5, Orientation::North}))] = 0.75;
  EXPECT_DOUBLE_EQ(west_mass(map, p), 0.25);
}

// ---- trainer -----------------------------------------------------------------------

TEST(Trainer, SameSeedSameMetrics) {
  auto run = [] {
    Trainer tr(smoke());
    std::ostringstream out;
    tr.train(&out);
    return std::make_pair(out.str(), tr.net().params());
  };
  const auto [a, pa] = run();
  const auto [b, pb] = run();
  EXPECT_EQ(a, b);
  EXPECT_TRUE(pa.same_values(pb));
  TrainConfig other = smoke();
  other.seed = 2;
  Trainer tr(other);
  std::ostringstream out;
  tr.train(&out);
  EXPECT_NE(out.str(), a);
}

TEST(Trainer, MetricsLinesHaveTheDocumentedFields) {
  Trainer tr(smoke("teleport"));
  std::ostringstream out;
  tr.train(&out);
  std::istringstream in(out.str());
  std::vector<nlohmann::json> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(nlohmann::json::parse(l));
  // Update 0, every 20 updates, and the end (40).
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0]["update_step"], 0);
  EXPECT_TRUE(lines[0]["train_loss"].is_null());
  EXPECT_EQ(lines[2]["update_step"], 40);
  for (const auto& j : lines) {
    for (const char* key : {"update_step", "algo", "F", "env", "ce_pose", "bce_past", "bce_objects", "tv_oracle_mean",
                            "support_size_mean", "seed"}) {
      EXPECT_TRUE(j.contains(key)) << key;
    }
    EXPECT_TRUE(j["bce_objects"].is_number());
    EXPECT_EQ(j["env"], "teleport");
    EXPECT_EQ(j["F"], 3);
  }
  Trainer fp(smoke("room9", Algo::FramePrediction));
  const auto rec = fp.metrics_record(fp.evaluate(), 0.5);
  EXPECT_TRUE(rec["F"].is_null());
  EXPECT_TRUE(rec["bce_objects"].is_null());
  EXPECT_EQ(rec["algo"], "fp");
}

TEST(Trainer, ProbeUpdatesNeverTouchTheRepresentation) {
  Trainer tr(smoke());
  tr.warm_up();
  const ParamSet before = tr.net().params();
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    const auto items = tr.buffer().sample(4, rng);
    const Batch b = make_batch(items);
    Tape tape(false);
    auto roll = tr.net().belief_rollout(tape, b.b0, tape.constant(b.observations), b.prev_actions);
    Matrix beliefs(b.observations.rows(), tr.net().sizes().belief);
    for (std::size_t t = 0; t < roll.beliefs.size(); ++t) beliefs.middleRows(static_cast<Eigen::Index>(t * 4), 4) = roll.beliefs[t].value();
    tr.probes().update(beliefs, make_probe_targets(tr.map(), items), {});
  }
  EXPECT_TRUE(tr.net().params().same_values(before));
}

TEST(Trainer, CheckpointRestoresTheRun) {
  const auto dir = scratch_dir("checkpoint");
  Trainer tr(smoke("non_teleport"));
  const auto report = tr.train(nullptr, dir.string());
  ASSERT_TRUE(fs::exists(dir / "checkpoint.bin"));
  const auto ck = load_checkpoint((dir / "checkpoint.bin").string());
  EXPECT_EQ(to_text(ck.config), to_text(tr.config()));
  const auto map = load_map(ck.config.env);
  Representation net(ck.config.algo, model_sizes(ck.config), 0);
  ProbeHeads probes(map, model_sizes(ck.config), 0);
  restore(ck, net, probes);
  EXPECT_TRUE(net.params().same_values(tr.net().params()));
  EXPECT_TRUE(probes.object_params().same_values(tr.probes().object_params()));
  EvalSetOptions o;
  o.episodes = ck.config.eval_episodes;
  o.episode_length = ck.config.eval_episode_length;
  o.seed = ck.config.effective_eval_seed();
  const auto again = evaluate(map, net, probes, make_eval_set(map, o));
  EXPECT_DOUBLE_EQ(again.ce_pose, report.ce_pose);
  EXPECT_DOUBLE_EQ(*again.bce_objects, *report.bce_objects);

  ProbeHeads wrong(preset_map("room9"), model_sizes(ck.config), 0);
  EXPECT_THROW(restore(ck, net, wrong), nn::CheckpointError);
  fs::remove_all(dir);
}

TEST(Trainer, RejectsForeignFiles) {
  const auto dir = scratch_dir("foreign");
  const auto path = (dir / "junk.bin").string();
  std::ofstream(path) << "not a checkpoint";
  EXPECT_THROW(load_checkpoint(path), nn::CheckpointError);
  EXPECT_THROW(load_checkpoint((dir / "missing.bin").string()), nn::CheckpointError);
  fs::remove_all(dir);
}

TEST(Trainer, ConcurrentCollectorsFeedTheBuffer) {
  TrainConfig cfg = smoke();
  cfg.collectors = 2;
  cfg.updates = 30;
  Trainer tr(cfg);
  const auto report = tr.train(nullptr);
  EXPECT_TRUE(std::isfinite(report.ce_pose));
  EXPECT_EQ(tr.update_step(), 30);
  EXPECT_GT(tr.episodes_collected(), static_cast<std::uint64_t>(cfg.warmup_episodes));
}

TEST(Trainer, EveryAlgorithmLowersItsLossOnRoom5) {
  for (Algo algo : {Algo::FramePrediction, Algo::Cpc, Algo::CpcAction}) {
    TrainConfig cfg = smoke("room5", algo);
    cfg.updates = 150;
    Trainer tr(cfg);
    tr.warm_up();
    double first = 0.0, last = 0.0;
    for (int i = 0; i < 150; ++i) {
      const double l = tr.update().loss;
      if (i < 20) first += l;
      if (i >= 130) last += l;
    }
    EXPECT_LT(last, first) << algo_name(algo);
  }
}

// ---- NCE identity -------------------------------------------------------------------

TEST(Nce, FixedExamples) {
  const std::vector<double> p{0.8, 0.2}, q{0.2, 0.8}, a{1.0, 0.0}, b{0.0, 1.0};
  EXPECT_NEAR(nce_check(p, p).j_star, -std::log(4.0), 1e-12);
  EXPECT_NEAR(nce_check(a, b).j_star, 0.0, 1e-12);
  const auto r = nce_check(p, q);
  EXPECT_NEAR(r.j_star, 2.0 * (0.8 * std::log(0.8) + 0.2 * std::log(0.2)), 1e-12);
  EXPECT_NEAR(r.j_star, -1.00081, 1e-5);
  EXPECT_LT(r.gap, 1e-12);
}

TEST(Nce, OptimalClassifierBeatsPerturbations) {
  Rng rng(4);
  std::uniform_real_distribution<double> u(0.01, 1.0), eps(-0.05, 0.05);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> p(6), q(6);
    for (auto& x : p) x = u(rng);
    for (auto& x : q) x = u(rng);
    const double sp = std::accumulate(p.begin(), p.end(), 0.0), sq = std::accumulate(q.begin(), q.end(), 0.0);
    for (auto& x : p) x /= sp;
    for (auto& x : q) x /= sq;
    const double best = nce_check(p, q).j_star;
    double perturbed = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double f = std::clamp(p[i] / (p[i] + q[i]) + eps(rng), 1e-6, 1.0 - 1e-6);
      perturbed += p[i] * std::log(f) + q[i] * std::log(1.0 - f);
    }
    EXPECT_LE(perturbed, best + 1e-12);
  }
}

TEST(Nce, BadInputThrows) {
  const std::vector<double> p{0.5, 0.5}, three{0.2, 0.3, 0.5}, neg{1.5, -0.5}, unnorm{0.5, 0.6};
  EXPECT_THROW(nce_check(p, three), std::invalid_argument);
  EXPECT_THROW(nce_check(p, neg), std::invalid_argument);
  EXPECT_THROW(nce_check(unnorm, p), std::invalid_argument);
  EXPECT_EQ(parse_distribution("0.25, 0.75"), (std::vector<double>{0.25, 0.75}));
  EXPECT_EQ(parse_distribution("0.5 0.5"), (std::vector<double>{0.5, 0.5}));
  EXPECT_THROW(parse_distribution("0.5,x"), std::invalid_argument);
}

TEST(Nce, JsDivergenceBounds) {
  const std::vector<double> a{1.0, 0.0}, b{0.0, 1.0};
  EXPECT_NEAR(js_divergence(a, b), std::log(2.0), 1e-12);
  EXPECT_NEAR(js_divergence(a, a), 0.0, 1e-12);
}

// ---- rendering ------------------------------------------------------------------------

TEST(Render, BeliefGridShading) {
  const auto map = preset_map("room5");
  std::vector<double> p(static_cast<std::size_t>(map.pose_count()), 0.0);
  p[static_cast<std::size_t>(map.pose_index({1, 1, Orientation::East}))] = 0.8;
  p[static_cast<std::size_t>(map.pose_index({2, 1, Orientation::East}))] = 0.2;
  const auto grids = belief_grids(map, p);
  const auto& east = grids[1];
  EXPECT_EQ(east(1, 1), 0);
  EXPECT_EQ(east(1, 2), 191);
  EXPECT_EQ(east(3, 3), 255);
  EXPECT_EQ(east(0, 0), kWallGray);
  EXPECT_EQ(grids[0](1, 1), 255);
}

TEST(Render, PgmAndCsv) {
  Image img(2, 3);
  img << 0, 128, 255, 10, 20, 30;
  EXPECT_EQ(to_pgm(img), "P2\n3 2\n255\n0 128 255\n10 20 30\n");
  const auto map = preset_map("room5");
  std::vector<double> p(static_cast<std::size_t>(map.pose_count()), 1.0 / map.pose_count());
  const auto csv = belief_csv(map, p);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), map.pose_count() + 1);
  EXPECT_EQ(csv.substr(0, 15), "x,y,theta,prob\n");
}

TEST(Render, PanelSize) {
  const auto map = preset_map("room9");
  AgentState s;
  s.pose = {4, 4, Orientation::North};
  std::vector<double> p(static_cast<std::size_t>(map.pose_count()), 1.0 / map.pose_count());
  const auto panel = belief_panel(map, observe(map, s), s.pose, p, p, 2);
  EXPECT_EQ(panel.rows() % 2, 0);
  EXPECT_GT(panel.cols(), 6 * 11 * 2);
  EXPECT_GE(panel.minCoeff(), 0);
  EXPECT_LE(panel.maxCoeff(), 255);
}

// ---- experiment plans ---------------------------------------------------------------

TEST(Experiments, PlansHaveTheExpectedCells) {
  const auto room = experiment_plan("room9_compare", config_preset("smoke"), {1, 2});
  ASSERT_EQ(room.cells.size(), 5u);
  EXPECT_EQ(room.cells[0].row, "FP");
  EXPECT_EQ(room.cells[4].row, "CPC|Action 30");
  const auto tele = experiment_plan("teleport_compare", config_preset("smoke"), {1});
  EXPECT_EQ(tele.cells.size(), 6u);
  EXPECT_EQ(experiment_plan("two_hallways", config_preset("smoke"), {1}).cells.size(), 1u);
  EXPECT_THROW(experiment_plan("nope", config_preset("smoke"), {1}), std::invalid_argument);
}

TEST(Experiments, TableShowsMeanAndSampleSd) {
  ExperimentPlan plan;
  plan.name = "t";
  ExperimentCell cell;
  cell.row = "FP";
  cell.column = "room9";
  plan.cells = {cell};
  plan.seeds = {1, 2};
  plan.metrics = {"ce_pose"};
  RunResult a, b;
  a.cell = b.cell = cell;
  a.seed = 1;
  b.seed = 2;
  a.final_report.ce_pose = 1.0;
  b.final_report.ce_pose = 2.0;
  const auto table = format_table(plan, {a, b});
  EXPECT_NE(table.find("1.5"), std::string::npos);
  EXPECT_NE(table.find("0.707"), std::string::npos);
  const auto csv = results_csv(plan, {a, b});
  EXPECT_NE(csv.find("\"FP\",room9,ce_pose,2,2"), std::string::npos);
  EXPECT_DOUBLE_EQ(report_metric(a.final_report, "ce_pose"), 1.0);
  EXPECT_THROW(report_metric(a.final_report, "nope"), std::invalid_argument);
}
