#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace belieflab::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Parameter {
  Matrix value;
  Matrix grad;
  Matrix m;  // Adam first moment
  Matrix v;  // Adam second moment
  bool has_grad = false;
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Named parameters plus the Adam state that goes with them. Iteration order
/// is by name, so anything that walks a ParamSet is deterministic.
class ParamSet {
 public:
  Parameter& add(const std::string& name, Matrix init);
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.contains(name); }
  std::size_t size() const { return params_.size(); }
  std::size_t coordinate_count() const;

  std::int64_t step_count() const { return step_count_; }
  void set_step_count(std::int64_t n) { step_count_ = n; }

  void zero_grad();

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  /// Values only; moments and gradients are ignored.
  bool same_values(const ParamSet& other) const;

 private:
  std::map<std::string, Parameter> params_;
  std::int64_t step_count_ = 0;
};

struct AdamOptions {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam on every parameter; clears gradients afterwards.
/// Throws if a parameter never received a gradient.
void adam_step(ParamSet& params, const AdamOptions& opts);

/// Glorot-uniform matrix, limit sqrt(6 / (fan_in + fan_out)).
Matrix glorot_uniform(int rows, int cols, std::mt19937_64& rng, int fan_in, int fan_out);

// Checkpoint layout (all integers and doubles little-endian):
//   magic "BLCK" | u32 version | i64 step_count | u32 record count
//   per record: u32 name length, name bytes, u32 rows, u32 cols,
//               rows*cols doubles value, then the same for m and v.
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Replaces `target` with `source` after checking names and shapes agree.
void assign_checked(ParamSet& target, ParamSet source);

void save_params(const ParamSet& params, std::ostream& out);
ParamSet load_params(std::istream& in);
void save_params_file(const ParamSet& params, const std::string& path);
ParamSet load_params_file(const std::string& path);
/// Several keyed sets in one file: u32 count, then per set a key and a checkpoint.
void save_bundle(const std::map<std::string, const ParamSet*>& sets, const std::string& path);
void save_bundle(const std::map<std::string, const ParamSet*>& sets, std::ostream& out);
std::map<std::string, ParamSet> load_bundle(const std::string& path);
std::map<std::string, ParamSet> load_bundle(std::istream& in);

}  // namespace belieflab::nn
