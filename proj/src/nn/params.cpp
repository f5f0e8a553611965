#include "belieflab/nn/params.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace belieflab::nn {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

Parameter& ParamSet::add(const std::string& name, Matrix init) {
  if (params_.contains(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
  Parameter p;
  p.grad = Matrix::Zero(init.rows(), init.cols());
  p.m = Matrix::Zero(init.rows(), init.cols());
  p.v = Matrix::Zero(init.rows(), init.cols());
  p.value = std::move(init);
  return params_.emplace(name, std::move(p)).first->second;
}

Parameter& ParamSet::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("no parameter '" + name + "'");
  return it->second;
}

const Parameter& ParamSet::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("no parameter '" + name + "'");
  return it->second;
}

std::size_t ParamSet::coordinate_count() const {
  std::size_t n = 0;
  for (const auto& [_, p] : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

void ParamSet::zero_grad() {
  for (auto& [_, p] : params_) {
    p.grad.setZero();
    p.has_grad = false;
  }
}

bool ParamSet::same_values(const ParamSet& other) const {
  if (params_.size() != other.params_.size()) return false;
  auto a = params_.begin();
  auto b = other.params_.begin();
  for (; a != params_.end(); ++a, ++b) {
    if (a->first != b->first) return false;
    const auto& x = a->second.value;
    const auto& y = b->second.value;
    if (x.rows() != y.rows() || x.cols() != y.cols()) return false;
    if (std::memcmp(x.data(), y.data(), sizeof(double) * static_cast<std::size_t>(x.size())) != 0) return false;
  }
  return true;
}

void adam_step(ParamSet& params, const AdamOptions& opts) {
  for (const auto& [name, p] : params) {
    if (!p.has_grad) throw std::logic_error("adam_step: parameter '" + name + "' has no gradient");
  }
  const std::int64_t t = params.step_count() + 1;
  const double c1 = 1.0 - std::pow(opts.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(opts.beta2, static_cast<double>(t));
  for (auto& [_, p] : params) {
    p.m = opts.beta1 * p.m + (1.0 - opts.beta1) * p.grad;
    p.v = opts.beta2 * p.v + (1.0 - opts.beta2) * p.grad.cwiseAbs2();
    p.value.array() -= opts.lr * (p.m.array() / c1) / ((p.v.array() / c2).sqrt() + opts.eps);
  }
  params.set_step_count(t);
  params.zero_grad();
}

Matrix glorot_uniform(int rows, int cols, std::mt19937_64& rng, int fan_in, int fan_out) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> d(-limit, limit);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = d(rng);
  return m;
}

namespace {

constexpr char kMagic[4] = {'B', 'L', 'C', 'K'};

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T take(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw CheckpointError("checkpoint truncated");
  return v;
}

void put_matrix(std::ostream& out, const Matrix& m) {
  out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * m.size()));
}

Matrix take_matrix(std::istream& in, std::uint32_t rows, std::uint32_t cols) {
  Matrix m(rows, cols);
  const auto bytes = static_cast<std::streamsize>(sizeof(double) * m.size());
  if (!in.read(reinterpret_cast<char*>(m.data()), bytes)) throw CheckpointError("checkpoint truncated");
  return m;
}

}  // namespace

void save_params(const ParamSet& params, std::ostream& out) {
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::int64_t>(out, params.step_count());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, p] : params) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.value.rows()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.value.cols()));
    put_matrix(out, p.value);
    put_matrix(out, p.m);
    put_matrix(out, p.v);
  }
  if (!out) throw CheckpointError("checkpoint write failed");
}

ParamSet load_params(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4)) throw CheckpointError("checkpoint truncated");
  if (std::memcmp(magic, kMagic, 4) != 0) throw CheckpointError("not a checkpoint (bad magic)");
  const auto version = take<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  ParamSet params;
  params.set_step_count(take<std::int64_t>(in));
  const auto count = take<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = take<std::uint32_t>(in);
    if (len > 4096) throw CheckpointError("corrupt parameter name length");
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw CheckpointError("checkpoint truncated");
    const auto rows = take<std::uint32_t>(in);
    const auto cols = take<std::uint32_t>(in);
    if (static_cast<std::uint64_t>(rows) * cols > (1ULL << 28)) throw CheckpointError("corrupt parameter shape");
    auto& p = params.add(name, take_matrix(in, rows, cols));
    p.m = take_matrix(in, rows, cols);
    p.v = take_matrix(in, rows, cols);
  }
  return params;
}

void save_params_file(const ParamSet& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot open '" + path + "' for writing");
  save_params(params, out);
}

ParamSet load_params_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open '" + path + "'");
  return load_params(in);
}

void assign_checked(ParamSet& target, ParamSet source) {
  if (source.size() != target.size()) throw CheckpointError("checkpoint does not match this model's parameters");
  for (const auto& [name, param] : target) {
    if (!source.contains(name)) throw CheckpointError("checkpoint lacks parameter '" + name + "'");
    const auto& other = source.get(name);
    if (other.value.rows() != param.value.rows() || other.value.cols() != param.value.cols()) {
      throw CheckpointError("parameter '" + name + "' has the wrong shape for this model");
    }
  }
  target = std::move(source);
}

void save_bundle(const std::map<std::string, const ParamSet*>& sets, std::ostream& out) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(sets.size()));
  for (const auto& [key, set] : sets) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(key.size()));
    out.write(key.data(), static_cast<std::streamsize>(key.size()));
    save_params(*set, out);
  }
  if (!out) throw CheckpointError("checkpoint write failed");
}

void save_bundle(const std::map<std::string, const ParamSet*>& sets, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot open '" + path + "' for writing");
  save_bundle(sets, out);
}

std::map<std::string, ParamSet> load_bundle(std::istream& in) {
  std::map<std::string, ParamSet> out;
  const auto count = take<std::uint32_t>(in);
  if (count > 1024) throw CheckpointError("corrupt bundle header");
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = take<std::uint32_t>(in);
    if (len > 4096) throw CheckpointError("corrupt bundle key");
    std::string key(len, '\0');
    if (!in.read(key.data(), len)) throw CheckpointError("checkpoint truncated");
    out.emplace(key, load_params(in));
  }
  return out;
}

std::map<std::string, ParamSet> load_bundle(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open '" + path + "'");
  return load_bundle(in);
}

}  // namespace belieflab::nn
