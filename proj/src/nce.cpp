#include "belieflab/nce.hpp"

#include <cmath>
#include <sstream>
#include <string>

namespace belieflab {

namespace {

void check_distribution(std::span<const double> d, const char* name) {
  if (d.empty()) throw std::invalid_argument(std::string(name) + " is empty");
  double total = 0.0;
  for (double v : d) {
    if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument(std::string(name) + " has an invalid entry");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument(std::string(name) + " sums to " + std::to_string(total) + ", not 1");
  }
}

// KL(a || m) with m = (a + b) / 2; terms with a = 0 vanish.
double kl_to_mixture(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > 0.0) s += a[i] * std::log(2.0 * a[i] / (a[i] + b[i]));
  }
  return s;
}

}  // namespace

double js_divergence(std::span<const double> p, std::span<const double> q) {
  return 0.5 * kl_to_mixture(p, q) + 0.5 * kl_to_mixture(q, p);
}

NceCheck nce_check(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("p and q must share one support");
  check_distribution(p, "p");
  check_distribution(q, "q");
  NceCheck out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double z = p[i] + q[i];
    if (p[i] > 0.0) out.j_star += p[i] * std::log(p[i] / z);
    if (q[i] > 0.0) out.j_star += q[i] * std::log(q[i] / z);
  }
  out.two_djs_minus_log4 = 2.0 * js_divergence(p, q) - std::log(4.0);
  out.gap = std::abs(out.j_star - out.two_djs_minus_log4);
  return out;
}

std::vector<double> parse_distribution(const std::string& text) {
  std::string s = text;
  for (char& c : s) {
    if (c == ',') c = ' ';
  }
  std::istringstream in(s);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size()) throw std::invalid_argument("bad probability '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace belieflab
