#include "belieflab/experiments.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "belieflab/trainer.hpp"

namespace belieflab {

std::string algorithm_label(Algo algo, int future) {
  switch (algo) {
    case Algo::FramePrediction: return "FP";
    case Algo::Cpc: return "CPC " + std::to_string(future);
    case Algo::CpcAction: return "CPC|Action " + std::to_string(future);
  }
  return "?";
}

std::vector<std::string> experiment_names() { return {"room9_compare", "teleport_compare", "two_hallways"}; }

ExperimentPlan experiment_plan(const std::string& name, const TrainConfig& base, std::vector<std::uint64_t> seeds) {
  if (seeds.empty()) throw std::invalid_argument("an experiment needs at least one seed");
  ExperimentPlan plan;
  plan.name = name;
  plan.seeds = std::move(seeds);
  auto add = [&](Algo algo, int future, const std::string& env) {
    ExperimentCell c;
    c.row = algorithm_label(algo, future);
    c.column = env;
    c.config = base;
    c.config.algo = algo;
    c.config.future = future;
    c.config.future_given = false;
    c.config.env = env;
    plan.cells.push_back(std::move(c));
  };
  if (name == "room9_compare") {
    add(Algo::FramePrediction, 30, "room9");
    add(Algo::Cpc, 1, "room9");
    add(Algo::Cpc, 30, "room9");
    add(Algo::CpcAction, 1, "room9");
    add(Algo::CpcAction, 30, "room9");
    plan.metrics = {"ce_pose", "bce_past", "tv_oracle_mean", "post_collapse_accuracy"};
  } else if (name == "teleport_compare") {
    for (const char* env : {"non_teleport", "teleport"}) {
      add(Algo::FramePrediction, 30, env);
      add(Algo::Cpc, 30, env);
      add(Algo::CpcAction, 30, env);
    }
    plan.metrics = {"bce_objects"};
  } else if (name == "two_hallways") {
    add(Algo::CpcAction, 30, "two_hallways");
    plan.metrics = {"ce_pose", "region_before_true", "region_before_other", "region_after_true"};
  } else {
    throw std::invalid_argument("unknown experiment '" + name + "' (expected room9_compare, teleport_compare or two_hallways)");
  }
  return plan;
}

double report_metric(const EvalReport& r, const std::string& metric) {
  if (metric == "ce_pose") return r.ce_pose;
  if (metric == "bce_past") return r.bce_past;
  if (metric == "bce_objects") return r.bce_objects.value_or(std::nan(""));
  if (metric == "tv_oracle_mean") return r.tv_oracle_mean;
  if (metric == "kl_oracle_mean") return r.kl_oracle_mean;
  if (metric == "post_collapse_accuracy") return r.post_collapse_accuracy;
  if (metric == "region_before_true") return r.region ? r.region->before_true : std::nan("");
  if (metric == "region_before_other") return r.region ? r.region->before_other : std::nan("");
  if (metric == "region_after_true") return r.region ? r.region->after_true : std::nan("");
  throw std::invalid_argument("unknown metric '" + metric + "'");
}

std::vector<RunResult> run_experiment(const ExperimentPlan& plan, const std::string& out_dir, const RunCallback& on_run) {
  std::vector<RunResult> results;
  for (const auto& cell : plan.cells) {
    for (const auto seed : plan.seeds) {
      RunResult res;
      res.cell = cell;
      res.cell.config.seed = seed;
      res.seed = seed;
      const auto start = std::chrono::steady_clock::now();
      Trainer trainer(res.cell.config);
      std::ofstream metrics;
      std::string run_dir;
      if (!out_dir.empty()) {
        auto dir = std::filesystem::path(out_dir) /
                   (cell.column + "_" + run_label(res.cell.config) + "_seed" + std::to_string(seed));
        std::filesystem::create_directories(dir);
        std::ofstream(dir / "config.txt") << to_text(res.cell.config);
        metrics.open(dir / "metrics.jsonl");
        run_dir = dir.string();
      }
      res.final_report = trainer.train(metrics.is_open() ? &metrics : nullptr, run_dir);
      res.initial = trainer.history().front().second;
      res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (on_run) on_run(res);
      results.push_back(std::move(res));
    }
  }
  return results;
}

namespace {

struct Stats {
  double mean = 0.0;
  double sd = 0.0;
};

Stats stats(const std::vector<double>& v) {
  Stats s;
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    for (double x : v) s.sd += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(s.sd / static_cast<double>(v.size() - 1));
  }
  return s;
}

std::vector<std::string> unique_in_order(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  for (const auto& i : items) {
    if (std::find(out.begin(), out.end(), i) == out.end()) out.push_back(i);
  }
  return out;
}

}  // namespace

std::string format_table(const ExperimentPlan& plan, const std::vector<RunResult>& results) {
  std::vector<std::string> rows, columns;
  for (const auto& c : plan.cells) {
    rows.push_back(c.row);
    columns.push_back(c.column);
  }
  rows = unique_in_order(rows);
  columns = unique_in_order(columns);

  std::map<std::tuple<std::string, std::string, std::string>, std::vector<double>> values;
  for (const auto& r : results) {
    for (const auto& m : plan.metrics) {
      values[{r.cell.row, r.cell.column, m}].push_back(report_metric(r.final_report, m));
    }
  }
  std::vector<std::string> headers{"Algorithm"};
  for (const auto& col : columns) {
    for (const auto& m : plan.metrics) headers.push_back(plan.metrics.size() > 1 ? col + " " + m : col);
  }
  std::vector<std::vector<std::string>> body;
  for (const auto& row : rows) {
    std::vector<std::string> line{row};
    for (const auto& col : columns) {
      for (const auto& m : plan.metrics) {
        auto it = values.find({row, col, m});
        if (it == values.end()) {
          line.push_back("--");
          continue;
        }
        const auto s = stats(it->second);
        std::ostringstream cell;
        cell << std::fixed << std::setprecision(3) << s.mean << " ± " << s.sd;
        line.push_back(cell.str());
      }
    }
    body.push_back(std::move(line));
  }
  // "±" is two bytes but one column wide.
  auto width = [](const std::string& s) {
    std::size_t w = 0;
    for (unsigned char c : s) w += (c & 0xC0) != 0x80;
    return w;
  };
  std::vector<std::size_t> widths(headers.size(), 0);
  for (std::size_t i = 0; i < headers.size(); ++i) widths[i] = width(headers[i]);
  for (const auto& line : body) {
    for (std::size_t i = 0; i < line.size(); ++i) widths[i] = std::max(widths[i], width(line[i]));
  }
  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& line) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      out << (i ? "  " : "") << line[i] << std::string(widths[i] - width(line[i]), ' ');
    }
    out << '\n';
  };
  emit(headers);
  std::size_t total = 0;
  for (auto w : widths) total += w + 2;
  out << std::string(total - 2, '-') << '\n';
  for (const auto& line : body) emit(line);
  return out.str();
}

std::string results_csv(const ExperimentPlan& plan, const std::vector<RunResult>& results) {
  std::ostringstream out;
  out.precision(17);
  out << "row,column,metric,seed,value\n";
  for (const auto& r : results) {
    for (const auto& m : plan.metrics) {
      out << '"' << r.cell.row << "\"," << r.cell.column << ',' << m << ',' << r.seed << ','
          << report_metric(r.final_report, m) << '\n';
    }
  }
  return out.str();
}

}  // namespace belieflab
