#include "belieflab/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace belieflab::nn {

namespace {

struct Coordinate {
  ParamSet* set;
  std::string name;
  Eigen::Index index;
};

double evaluate(const LossFn& loss) {
  Tape tape(false);
  const double v = loss(tape).item();
  if (!std::isfinite(v)) throw std::domain_error("grad_check: loss is not finite");
  return v;
}

}  // namespace

GradCheckResult grad_check(const LossFn& loss, const std::vector<ParamSet*>& sets, const GradCheckOptions& opts) {
  for (auto* s : sets) s->zero_grad();
  {
    Tape tape;
    Var l = loss(tape);
    if (!std::isfinite(l.item())) throw std::domain_error("grad_check: loss is not finite");
    tape.backward(l);
  }

  std::vector<Coordinate> coords;
  for (auto* s : sets) {
    for (auto& [name, p] : *s) {
      for (Eigen::Index i = 0; i < p.value.size(); ++i) coords.push_back({s, name, i});
    }
  }
  if (opts.max_coordinates > 0 && coords.size() > opts.max_coordinates) {
    std::mt19937_64 rng(opts.seed);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(opts.max_coordinates);
  }

  GradCheckResult result;
  result.coordinates = coords.size();
  for (const auto& c : coords) {
    Parameter& p = c.set->get(c.name);
    const double analytic = p.grad.size() > 0 ? p.grad.data()[c.index] : 0.0;
    double& theta = p.value.data()[c.index];
    const double saved = theta;
    theta = saved + opts.step;
    const double plus = evaluate(loss);
    theta = saved - opts.step;
    const double minus = evaluate(loss);
    theta = saved;
    const double numeric = (plus - minus) / (2.0 * opts.step);
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    const double rel = std::abs(analytic - numeric) / denom;
    result.max_absolute_error = std::max(result.max_absolute_error, std::abs(analytic - numeric));
    if (rel > result.max_relative_error) {
      result.max_relative_error = rel;
      result.worst_parameter = c.name + "[" + std::to_string(c.index) + "]";
      result.worst_analytic = analytic;
      result.worst_numeric = numeric;
    }
  }
  for (auto* s : sets) s->zero_grad();
  return result;
}

}  // namespace belieflab::nn
