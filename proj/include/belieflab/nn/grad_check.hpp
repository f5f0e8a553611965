#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "belieflab/nn/autodiff.hpp"

namespace belieflab::nn {

struct GradCheckOptions {
  double step = 1e-5;
  /// 0 checks every coordinate; otherwise a uniform sample of this many
  /// (without replacement) when the model has more.
  std::size_t max_coordinates = 0;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;  // max |a - n|, the scale of finite-difference roundoff
  std::size_t coordinates = 0;
  std::string worst_parameter;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

using LossFn = std::function<Var(Tape&)>;

/// Compares reverse-mode gradients with central differences on the
/// parameters of `sets`. Relative error is |a - n| / max(|a|, |n|, 1e-8).
/// `loss` must rebuild the whole computation on the tape it is given.
GradCheckResult grad_check(const LossFn& loss, const std::vector<ParamSet*>& sets, const GradCheckOptions& opts = {});

}  // namespace belieflab::nn
