#pragma once

#include <functional>
#include <string>
#include <vector>

#include "belieflab/config.hpp"
#include "belieflab/evaluation.hpp"

namespace belieflab {

/// One trained setting of a comparison grid, e.g. "CPC|Action 30" on teleport.
struct ExperimentCell {
  std::string row;     // algorithm label
  std::string column;  // environment
  TrainConfig config;  // seed is filled per run
};

struct ExperimentPlan {
  std::string name;
  std::vector<ExperimentCell> cells;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> metrics;  // columns reported per environment
};

/// Presets: room9_compare, teleport_compare, two_hallways. `base` supplies
/// sizes and schedule; algorithm, F and env are set per cell.
ExperimentPlan experiment_plan(const std::string& name, const TrainConfig& base, std::vector<std::uint64_t> seeds);
std::vector<std::string> experiment_names();

/// "FP", "CPC 1", "CPC|Action 30", ...
std::string algorithm_label(Algo algo, int future);

struct RunResult {
  ExperimentCell cell;
  std::uint64_t seed = 0;
  EvalReport initial;
  EvalReport final_report;
  double seconds = 0.0;
};

using RunCallback = std::function<void(const RunResult&)>;

/// Trains every cell for every seed, sequentially. When `out_dir` is set each
/// run writes `<out_dir>/<env>_<label>_seed<k>/` with config, metrics and a
/// checkpoint.
std::vector<RunResult> run_experiment(const ExperimentPlan& plan, const std::string& out_dir = "",
                                      const RunCallback& on_run = {});

/// Named scalar of a report: ce_pose, bce_past, bce_objects, tv_oracle_mean,
/// kl_oracle_mean, post_collapse_accuracy, region_before_true,
/// region_before_other, region_after_true.
double report_metric(const EvalReport& r, const std::string& metric);

/// Mean ± sample standard deviation per (row, column, metric), rows in plan
/// order.
std::string format_table(const ExperimentPlan& plan, const std::vector<RunResult>& results);
/// Long-form CSV: row,column,metric,seed,value.
std::string results_csv(const ExperimentPlan& plan, const std::vector<RunResult>& results);

}  // namespace belieflab
