#include "belieflab/nn/layers.hpp"

namespace belieflab::nn {

Dense Dense::create(ParamSet& params, std::string name, int in, int out, std::mt19937_64& rng) {
  params.add(name + ".W", glorot_uniform(in, out, rng, in, out));
  params.add(name + ".b", Matrix::Zero(1, out));
  return {std::move(name), in, out};
}

Var Dense::operator()(Tape& tape, ParamSet& params, Var x) const {
  return affine(x, tape.param(params.get(name + ".W")), tape.param(params.get(name + ".b")));
}

GruCell GruCell::create(ParamSet& params, std::string name, int input_size, int hidden_size, std::mt19937_64& rng) {
  Matrix w(input_size, 3 * hidden_size);
  Matrix u(hidden_size, 3 * hidden_size);
  // Each gate block is initialised as its own matrix.
  for (int g = 0; g < 3; ++g) {
    w.middleCols(g * hidden_size, hidden_size) = glorot_uniform(input_size, hidden_size, rng, input_size, hidden_size);
    u.middleCols(g * hidden_size, hidden_size) = glorot_uniform(hidden_size, hidden_size, rng, hidden_size, hidden_size);
  }
  params.add(name + ".W", std::move(w));
  params.add(name + ".U", std::move(u));
  params.add(name + ".b", Matrix::Zero(1, 3 * hidden_size));
  return {std::move(name), input_size, hidden_size};
}

Var GruCell::operator()(Tape& tape, ParamSet& params, Var x, Var h) const {
  return gru_cell(x, h, tape.param(params.get(name + ".W")), tape.param(params.get(name + ".U")),
                  tape.param(params.get(name + ".b")));
}

Mlp Mlp::create(ParamSet& params, const std::string& name, int in, int hidden, int out, std::mt19937_64& rng) {
  auto h = Dense::create(params, name + ".hidden", in, hidden, rng);
  auto o = Dense::create(params, name + ".out", hidden, out, rng);
  return {std::move(h), std::move(o)};
}

Var Mlp::operator()(Tape& tape, ParamSet& params, Var x) const {
  return output(tape, params, relu(hidden(tape, params, x)));
}

}  // namespace belieflab::nn
