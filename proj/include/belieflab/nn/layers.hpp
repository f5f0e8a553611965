#pragma once

#include <string>

#include "belieflab/nn/autodiff.hpp"

namespace belieflab::nn {

/// x W + b. Parameters live in a ParamSet under `<name>.W` and `<name>.b`;
/// the layer itself only remembers names and sizes, so it stays valid when
/// the ParamSet is copied.
struct Dense {
  std::string name;
  int in = 0;
  int out = 0;

  static Dense create(ParamSet& params, std::string name, int in, int out, std::mt19937_64& rng);
  Var operator()(Tape& tape, ParamSet& params, Var x) const;
};

/// GRU cell with packed gate weights `<name>.W` (in x 3H), `<name>.U`
/// (H x 3H) and `<name>.b` (1 x 3H), column blocks ordered reset, update,
/// candidate. Biases start at zero.
struct GruCell {
  std::string name;
  int input_size = 0;
  int hidden_size = 0;

  static GruCell create(ParamSet& params, std::string name, int input_size, int hidden_size, std::mt19937_64& rng);
  Var operator()(Tape& tape, ParamSet& params, Var x, Var h) const;
};

/// Dense -> ReLU -> Dense.
struct Mlp {
  Dense hidden;
  Dense output;

  static Mlp create(ParamSet& params, const std::string& name, int in, int hidden, int out, std::mt19937_64& rng);
  Var operator()(Tape& tape, ParamSet& params, Var x) const;
};

}  // namespace belieflab::nn
