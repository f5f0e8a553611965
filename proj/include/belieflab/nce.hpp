#pragma once

#include <span>
#include <string>
#include <stdexcept>
#include <vector>

namespace belieflab {

/// Binary NCE with positives from `p` and negatives from `q` over one finite
/// support, evaluated at the optimal classifier f*(o) = p(o) / (p(o) + q(o)).
struct NceCheck {
  double j_star = 0.0;              // E_p[log f*] + E_q[log(1 - f*)]
  double two_djs_minus_log4 = 0.0;  // 2 D_JS(p || q) - ln 4
  double gap = 0.0;                 // |j_star - two_djs_minus_log4|
};

/// Throws std::invalid_argument when the supports differ in size, an entry is
/// negative or non-finite, or a distribution does not sum to 1 within 1e-9.
NceCheck nce_check(std::span<const double> p, std::span<const double> q);

double js_divergence(std::span<const double> p, std::span<const double> q);

/// Parses "0.8,0.2" (commas or whitespace).
std::vector<double> parse_distribution(const std::string& text);

}  // namespace belieflab
