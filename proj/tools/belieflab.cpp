// Command-line front end: train, eval, render-belief, nce-check, experiment,
// list-presets.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include "CLI11.hpp"
#include "belieflab/config.hpp"
#include "belieflab/experiments.hpp"
#include "belieflab/nce.hpp"
#include "belieflab/render.hpp"
#include "belieflab/trainer.hpp"

namespace fs = std::filesystem;
using namespace belieflab;

namespace {

struct ConfigArgs {
  std::string preset = "desk";
  std::string file;
  std::string env;
  std::string algo;
  int future = 0;
  std::uint64_t seed = 0;
  int updates = -1;
  std::vector<std::string> sets;
};

void add_config_options(CLI::App* cmd, ConfigArgs& a, bool run_options) {
  cmd->add_option("--preset", a.preset, "config preset (paper, desk, smoke)");
  cmd->add_option("--config", a.file, "key = value config file, applied over the preset");
  cmd->add_option("--set", a.sets, "extra key=value overrides, applied last");
  cmd->add_option("--updates", a.updates, "total updates");
  if (!run_options) return;
  cmd->add_option("--env", a.env, "map preset name or map file");
  cmd->add_option("--algo", a.algo, "fp, cpc or cpc_action");
  cmd->add_option("--F", a.future, "future length F");
  cmd->add_option("--seed", a.seed, "run seed");
}

TrainConfig build_config(const ConfigArgs& a) {
  TrainConfig cfg = config_preset(a.preset);
  if (!a.file.empty()) cfg = load_config(a.file, cfg);
  if (!a.env.empty()) cfg.env = a.env;
  if (!a.algo.empty()) apply_setting(cfg, "algo", a.algo);
  if (a.future != 0) apply_setting(cfg, "F", std::to_string(a.future));
  if (a.seed != 0) cfg.seed = a.seed;
  if (a.updates >= 0) cfg.updates = a.updates;
  for (const auto& s : a.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  return cfg;
}

void prepare_dir(const std::string& dir, bool force) {
  if (fs::exists(dir) && !fs::is_empty(dir) && !force) {
    throw std::runtime_error("output directory '" + dir + "' is not empty (use --force)");
  }
  fs::create_directories(dir);
}

void print_report(const EvalReport& r, std::ostream& out) {
  out << "ce_pose                " << r.ce_pose << "\n"
      << "bce_past               " << r.bce_past << "\n";
  if (r.bce_objects) out << "bce_objects            " << *r.bce_objects << "\n";
  out << "tv_oracle_mean         " << r.tv_oracle_mean << "\n"
      << "kl_oracle_mean         " << r.kl_oracle_mean << "\n"
      << "support_size_mean      " << r.support_size_mean << "\n"
      << "oracle_ce              " << r.oracle_ce << "\n"
      << "post_collapse_accuracy " << r.post_collapse_accuracy << " over " << r.post_collapse_steps << " steps\n"
      << "support_monotone       " << (r.support_monotone ? "yes" : "NO") << "\n";
  if (r.region) {
    out << "region before (true / other) " << r.region->before_true << " / " << r.region->before_other << " over "
        << r.region->before_steps << " steps\n"
        << "region after (true)          " << r.region->after_true << " over " << r.region->after_steps
        << " steps\n";
  }
  out << "\nstep  tv      ce      support\n";
  for (std::size_t t = 0; t < r.tv_curve.size(); ++t) {
    if (t < 10 || t % 10 == 0 || t + 1 == r.tv_curve.size()) {
      out << t << "  " << r.tv_curve[t] << "  " << r.ce_curve[t] << "  " << r.support_curve[t] << "\n";
    }
  }
}

struct Loaded {
  RunCheckpoint ck;
  TrainConfig cfg;
  GridMap map;
  Representation net;
  ProbeHeads probes;
};

Loaded load_run(const std::string& checkpoint, const std::string& env) {
  RunCheckpoint ck = load_checkpoint(checkpoint);
  TrainConfig cfg = ck.config;
  if (!env.empty()) cfg.env = env;
  GridMap map = load_map(cfg.env);
  Representation net(cfg.algo, model_sizes(cfg), 0);
  ProbeHeads probes(map, model_sizes(cfg), 0);
  restore(ck, net, probes);
  return {std::move(ck), cfg, std::move(map), std::move(net), std::move(probes)};
}

int cmd_train(const ConfigArgs& a, const std::string& out, bool force, bool quiet) {
  TrainConfig cfg = build_config(a);
  for (const auto& w : validate(cfg)) std::cerr << "warning: " << w << "\n";
  prepare_dir(out, force);
  std::ofstream(fs::path(out) / "config.txt") << to_text(cfg);
  std::ofstream metrics(fs::path(out) / "metrics.jsonl");
  if (!metrics) throw std::runtime_error("cannot write metrics in '" + out + "'");
  Trainer trainer(cfg);
  trainer.train(&metrics, out, [&](const nlohmann::json& rec) {
    if (!quiet) std::cout << rec.dump() << std::endl;
  });
  std::cout << "run written to " << out << "\n";
  return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& env, int episodes, int length,
             std::uint64_t seed) {
  auto run = load_run(checkpoint, env);
  EvalSetOptions o;
  o.episodes = episodes;
  o.episode_length = length;
  o.seed = seed != 0 ? seed : run.cfg.effective_eval_seed();
  o.observation = run.cfg.observation();
  const EvalSet set = make_eval_set(run.map, o);
  const EvalReport r = evaluate(run.map, run.net, run.probes, set, run.map.name() == "two_hallways");
  std::cout << "env " << run.cfg.env << ", algo " << algo_name(run.cfg.algo) << ", " << episodes
            << " episodes of " << length << " steps\n";
  print_report(r, std::cout);
  return 0;
}

int cmd_render(const std::string& checkpoint, const std::string& env, std::uint64_t seed,
               const std::vector<int>& steps, int length, const std::string& out, int scale) {
  auto run = load_run(checkpoint, env);
  for (int s : steps) {
    if (s < 0 || s >= length) {
      throw std::invalid_argument("step " + std::to_string(s) + " is beyond the episode (length " +
                                  std::to_string(length) + ")");
    }
  }
  EvalSetOptions o;
  o.episodes = 1;
  o.episode_length = length;
  o.seed = seed;
  o.observation = run.cfg.observation();
  const EvalSet set = make_eval_set(run.map, o);
  const auto& ep = set.episodes.front();
  const Matrix probs = run.probes.extract_belief(eval_beliefs(run.net, set));
  fs::create_directories(out);
  for (int s : steps) {
    const auto t = static_cast<std::size_t>(s);
    const std::span<const double> probe(probs.row(s).data(), static_cast<std::size_t>(probs.cols()));
    const auto& oracle = ep.oracle[t].probs;
    const std::string stem = (fs::path(out) / ("step_" + std::to_string(s))).string();
    write_pgm(belief_panel(run.map, ep.observations[t], ep.states[t].pose, probe, oracle, scale), stem + ".pgm");
    std::ofstream(stem + "_probe.csv") << belief_csv(run.map, probe);
    std::ofstream(stem + "_oracle.csv") << belief_csv(run.map, oracle);
    std::cout << stem << ".pgm  tv " << total_variation(ep.oracle[t], probe) << "  support "
              << support_size(ep.oracle[t]) << "\n";
  }
  return 0;
}

int cmd_nce(const std::string& p_text, const std::string& q_text, int random_pairs, int support, std::uint64_t seed) {
  if (random_pairs > 0) {
    std::mt19937_64 rng(seed);
    std::gamma_distribution<double> gamma(1.0, 1.0);
    std::uniform_int_distribution<int> size(1, support);
    double worst = 0.0;
    for (int i = 0; i < random_pairs; ++i) {
      const int k = size(rng);
      std::vector<double> p(static_cast<std::size_t>(k)), q(static_cast<std::size_t>(k));
      double sp = 0.0, sq = 0.0;
      for (int j = 0; j < k; ++j) {
        sp += p[static_cast<std::size_t>(j)] = gamma(rng);
        sq += q[static_cast<std::size_t>(j)] = gamma(rng);
      }
      for (auto& v : p) v /= sp;
      for (auto& v : q) v /= sq;
      worst = std::max(worst, nce_check(p, q).gap);
    }
    std::cout << "pairs " << random_pairs << "  max_gap " << worst << "\n";
    return worst < 1e-6 ? 0 : 2;
  }
  const auto r = nce_check(parse_distribution(p_text), parse_distribution(q_text));
  std::cout.precision(12);
  std::cout << "J_star              " << r.j_star << "\n"
            << "two_djs_minus_log4  " << r.two_djs_minus_log4 << "\n"
            << "gap                 " << r.gap << "\n";
  return 0;
}

int cmd_experiment(const std::string& name, const ConfigArgs& a, const std::vector<std::uint64_t>& seeds,
                   const std::string& out, bool force) {
  const TrainConfig base = build_config(a);
  const auto plan = experiment_plan(name, base, seeds);
  prepare_dir(out, force);
  const auto results = run_experiment(plan, out, [](const RunResult& r) {
    std::cout << r.cell.column << "  " << r.cell.row << "  seed " << r.seed << "  ce_pose "
              << r.final_report.ce_pose << "  (" << r.seconds << " s)" << std::endl;
  });
  const std::string table = format_table(plan, results);
  std::cout << "\n" << table;
  std::ofstream(fs::path(out) / "table.txt") << table;
  std::ofstream(fs::path(out) / "results.csv") << results_csv(plan, results);
  return 0;
}

int cmd_list() {
  std::cout << "maps:";
  for (const auto& n : preset_map_names()) std::cout << " " << n;
  std::cout << "\nconfigs:";
  for (const auto& n : config_preset_names()) std::cout << " " << n;
  std::cout << "\nexperiments:";
  for (const auto& n : experiment_names()) std::cout << " " << n;
  std::cout << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Belief-state representation lab"};
  app.require_subcommand(1);

  ConfigArgs train_args;
  std::string train_out;
  bool force = false;
  bool quiet = false;
  auto* train = app.add_subcommand("train", "train one representation and its probes");
  add_config_options(train, train_args, true);
  train->add_option("--out", train_out, "run directory")->required();
  train->add_flag("--force", force, "allow a non-empty run directory");
  train->add_flag("--quiet", quiet, "do not echo metrics");

  std::string checkpoint, env;
  int episodes = 50, length = 200;
  std::uint64_t eval_seed = 0;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on held-out episodes");
  eval->add_option("--checkpoint", checkpoint, "run checkpoint file")->required();
  eval->add_option("--env", env, "override the map");
  eval->add_option("--episodes", episodes, "held-out episodes")->check(CLI::PositiveNumber);
  eval->add_option("--length", length, "steps per episode")->check(CLI::PositiveNumber);
  eval->add_option("--seed", eval_seed, "episode seed (default: the run's evaluation seed)");

  std::uint64_t render_seed = 1;
  std::vector<int> steps{0, 5, 20, 60};
  int render_length = 100, scale = 8;
  std::string render_out;
  auto* render = app.add_subcommand("render-belief", "write PGM belief panels for one episode");
  render->add_option("--checkpoint", checkpoint, "run checkpoint file")->required();
  render->add_option("--env", env, "override the map");
  render->add_option("--seed", render_seed, "episode seed");
  render->add_option("--steps", steps, "0-based steps to render")->delimiter(',');
  render->add_option("--length", render_length, "episode length")->check(CLI::PositiveNumber);
  render->add_option("--scale", scale, "pixels per cell")->check(CLI::PositiveNumber);
  render->add_option("--out", render_out, "output directory")->required();

  std::string p_text, q_text;
  int random_pairs = 0, support = 16;
  std::uint64_t nce_seed = 1;
  auto* nce = app.add_subcommand("nce-check", "optimal binary NCE objective against 2 D_JS - ln 4");
  nce->add_option("--p", p_text, "positive distribution, e.g. 0.8,0.2");
  nce->add_option("--q", q_text, "negative distribution");
  nce->add_option("--random", random_pairs, "check this many random pairs instead");
  nce->add_option("--support", support, "largest support for --random")->check(CLI::PositiveNumber);
  nce->add_option("--seed", nce_seed, "seed for --random");

  std::string experiment_name, experiment_out;
  ConfigArgs experiment_args;
  std::vector<std::uint64_t> seeds{1, 2};
  auto* experiment = app.add_subcommand("experiment", "train an algorithm grid and print a comparison table");
  experiment->add_option("name", experiment_name, "room9_compare, teleport_compare or two_hallways")->required();
  add_config_options(experiment, experiment_args, false);
  experiment->add_option("--seeds", seeds, "seeds")->delimiter(',');
  experiment->add_option("--out", experiment_out, "output directory")->required();
  experiment->add_flag("--force", force, "allow a non-empty output directory");

  auto* list = app.add_subcommand("list-presets", "list map, config and experiment presets");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(train_args, train_out, force, quiet);
    if (eval->parsed()) return cmd_eval(checkpoint, env, episodes, length, eval_seed);
    if (render->parsed()) return cmd_render(checkpoint, env, render_seed, steps, render_length, render_out, scale);
    if (nce->parsed()) {
      if (random_pairs <= 0 && (p_text.empty() || q_text.empty())) {
        throw std::invalid_argument("nce-check needs --p and --q, or --random");
      }
      return cmd_nce(p_text, q_text, random_pairs, support, nce_seed);
    }
    if (experiment->parsed()) return cmd_experiment(experiment_name, experiment_args, seeds, experiment_out, force);
    if (list->parsed()) return cmd_list();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
