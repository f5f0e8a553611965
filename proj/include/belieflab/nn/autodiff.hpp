#pragma once

#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "belieflab/nn/params.hpp"

namespace belieflab::nn {

class Tape;

/// Handle to a value recorded on a Tape. Rows are batch entries.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  /// Value of a 1x1 result.
  double item() const;
  Tape& tape() const { return *tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

/// Wengert list for reverse-mode differentiation. Nodes are appended in
/// evaluation order, so a reverse sweep is a valid topological order.
/// A tape built with `record = false` never tracks gradients.
class Tape {
 public:
  using Backprop = std::function<void(Tape&, int self)>;

  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }

  Var constant(Matrix value);
  /// Leaf bound to a parameter; the parameter must outlive the tape and stay
  /// unchanged until backward() has run. Repeated calls reuse the node.
  Var param(Parameter& p);

  /// Seeds d(loss)/d(loss) = 1 and accumulates into every parameter reached.
  void backward(Var loss);

  const Matrix& value(int id) const {
    const auto& n = nodes_[static_cast<std::size_t>(id)];
    return n.external ? *n.external : n.value;
  }
  bool requires_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }
  /// Gradient buffer of a node, zero-initialised on first access.
  Matrix& grad(int id);
  bool has_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].grad.size() > 0; }
  std::vector<Matrix>& saved(int id) { return nodes_[static_cast<std::size_t>(id)].saved; }

  /// Appends a node. `backprop` runs during backward() only when the node
  /// requires a gradient and received one.
  Var push(Matrix value, bool requires_grad, Backprop backprop, std::vector<Matrix> saved = {});

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    const Matrix* external = nullptr;
    Matrix grad;
    bool requires_grad = false;
    Backprop backprop;
    std::vector<Matrix> saved;
  };

  bool record_;
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, int> param_nodes_;
};

// ---- operations -----------------------------------------------------------

Var matmul(Var a, Var b);
/// x W + b with `b` a 1 x out row broadcast over the batch.
Var affine(Var x, Var w, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var relu(Var a);
Var sigmoid(Var a);
Var tanh(Var a);
/// Stops gradient flow: a constant copy of the value.
Var detach(Var a);

Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_rows(Var a, Eigen::Index begin, Eigen::Index count);
Var slice_cols(Var a, Eigen::Index begin, Eigen::Index count);
/// out.row(i) = a.row(index[i]); the backward pass scatter-adds.
Var gather_rows(Var a, std::span<const int> index);
Var sum(Var a);
Var mean(Var a);

/// Fused GRU cell. `w` is in x 3H, `u` is H x 3H and `b` is 1 x 3H with
/// column blocks ordered (reset, update, candidate):
///   r = sigmoid(x W_r + h U_r + b_r)
///   z = sigmoid(x W_z + h U_z + b_z)
///   n = tanh(x W_n + (r * h) U_n + b_n)
///   h' = (1 - z) * n + z * h
Var gru_cell(Var x, Var h, Var w, Var u, Var b);

/// Mean over all elements of the stable logistic loss
/// max(x, 0) - x y + log(1 + exp(-|x|)).
Var sigmoid_ce(Var logits, const Matrix& labels);
/// Mean over rows of -log softmax(logits)[target].
Var softmax_ce(Var logits, std::span<const int> targets);

/// Row-wise softmax of a plain matrix.
Matrix softmax_rows(const Matrix& logits);
Matrix sigmoid_values(const Matrix& logits);
Matrix tanh_values(const Matrix& x);

}  // namespace belieflab::nn
