#include "belieflab/nn/autodiff.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace belieflab::nn {

const Matrix& Var::value() const { return tape_->value(id_); }

double Var::item() const {
  const auto& v = value();
  if (v.size() != 1) throw std::logic_error("item() on a non-scalar value");
  return v(0, 0);
}

Var Tape::constant(Matrix value) { return push(std::move(value), false, nullptr); }

Var Tape::param(Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return {this, it->second};
  Node n;
  n.external = &p.value;
  n.requires_grad = record_;
  if (record_) {
    Parameter* target = &p;
    n.backprop = [target](Tape& t, int self) {
      if (target->grad.rows() != target->value.rows() || target->grad.cols() != target->value.cols()) {
        target->grad = Matrix::Zero(target->value.rows(), target->value.cols());
      }
      target->grad += t.grad(self);
      target->has_grad = true;
    };
  }
  nodes_.push_back(std::move(n));
  const int id = static_cast<int>(nodes_.size()) - 1;
  param_nodes_.emplace(&p, id);
  return {this, id};
}

Var Tape::push(Matrix value, bool requires_grad, Backprop backprop, std::vector<Matrix> saved) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = record_ && requires_grad;
  if (n.requires_grad) {
    n.backprop = std::move(backprop);
    n.saved = std::move(saved);
  }
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Matrix& Tape::grad(int id) {
  auto& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.size() == 0) {
    const auto& v = n.external ? *n.external : n.value;
    n.grad = Matrix::Zero(v.rows(), v.cols());
  }
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.value().size() != 1) throw std::logic_error("backward() needs a scalar loss");
  if (!requires_grad(loss.id())) return;
  grad(loss.id())(0, 0) += 1.0;
  for (int id = loss.id(); id >= 0; --id) {
    auto& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.requires_grad || n.grad.size() == 0 || !n.backprop) continue;
    n.backprop(*this, id);
  }
}

namespace {

Tape& same_tape(Var a, Var b) {
  if (&a.tape() != &b.tape()) throw std::logic_error("operands live on different tapes");
  return a.tape();
}

void check_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()) + ")");
  }
}

bool any_grad(Tape& t, std::initializer_list<Var> vars) {
  for (auto v : vars) {
    if (t.requires_grad(v.id())) return true;
  }
  return false;
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimensions differ");
  const int ia = a.id(), ib = b.id();
  return t.push(a.value() * b.value(), any_grad(t, {a, b}), [ia, ib](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    if (tp.requires_grad(ia)) tp.grad(ia).noalias() += g * tp.value(ib).transpose();
    if (tp.requires_grad(ib)) tp.grad(ib).noalias() += tp.value(ia).transpose() * g;
  });
}

Var affine(Var x, Var w, Var b) {
  Tape& t = same_tape(x, w);
  same_tape(x, b);
  if (x.cols() != w.rows()) throw std::invalid_argument("affine: input width does not match weight rows");
  if (b.rows() != 1 || b.cols() != w.cols()) throw std::invalid_argument("affine: bias shape mismatch");
  Matrix out = x.value() * w.value();
  out.rowwise() += b.value().row(0);
  const int ix = x.id(), iw = w.id(), ib = b.id();
  return t.push(std::move(out), any_grad(t, {x, w, b}), [ix, iw, ib](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    if (tp.requires_grad(ix)) tp.grad(ix).noalias() += g * tp.value(iw).transpose();
    if (tp.requires_grad(iw)) tp.grad(iw).noalias() += tp.value(ix).transpose() * g;
    if (tp.requires_grad(ib)) tp.grad(ib) += g.colwise().sum();
  });
}

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b);
  check_same_shape(a.value(), b.value(), "add");
  const int ia = a.id(), ib = b.id();
  return t.push(a.value() + b.value(), any_grad(t, {a, b}), [ia, ib](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    if (tp.requires_grad(ia)) tp.grad(ia) += g;
    if (tp.requires_grad(ib)) tp.grad(ib) += g;
  });
}

Var sub(Var a, Var b) {
  Tape& t = same_tape(a, b);
  check_same_shape(a.value(), b.value(), "sub");
  const int ia = a.id(), ib = b.id();
  return t.push(a.value() - b.value(), any_grad(t, {a, b}), [ia, ib](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    if (tp.requires_grad(ia)) tp.grad(ia) += g;
    if (tp.requires_grad(ib)) tp.grad(ib) -= g;
  });
}

Var mul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  check_same_shape(a.value(), b.value(), "mul");
  const int ia = a.id(), ib = b.id();
  return t.push(a.value().cwiseProduct(b.value()), any_grad(t, {a, b}), [ia, ib](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    if (tp.requires_grad(ia)) tp.grad(ia) += g.cwiseProduct(tp.value(ib));
    if (tp.requires_grad(ib)) tp.grad(ib) += g.cwiseProduct(tp.value(ia));
  });
}

Var scale(Var a, double s) {
  Tape& t = a.tape();
  const int ia = a.id();
  return t.push(a.value() * s, any_grad(t, {a}), [ia, s](Tape& tp, int self) { tp.grad(ia) += s * tp.grad(self); });
}

Var relu(Var a) {
  Tape& t = a.tape();
  const int ia = a.id();
  return t.push(a.value().cwiseMax(0.0), any_grad(t, {a}), [ia](Tape& tp, int self) {
    tp.grad(ia).array() += (tp.value(ia).array() > 0.0).select(tp.grad(self).array(), 0.0);
  });
}

Var sigmoid(Var a) {
  Tape& t = a.tape();
  const int ia = a.id();
  return t.push(sigmoid_values(a.value()), any_grad(t, {a}), [ia](Tape& tp, int self) {
    const Matrix& s = tp.value(self);
    tp.grad(ia).array() += tp.grad(self).array() * s.array() * (1.0 - s.array());
  });
}

Var tanh(Var a) {
  Tape& t = a.tape();
  const int ia = a.id();
  return t.push(tanh_values(a.value()), any_grad(t, {a}), [ia](Tape& tp, int self) {
    const Matrix& y = tp.value(self);
    tp.grad(ia).array() += tp.grad(self).array() * (1.0 - y.array().square());
  });
}

Var detach(Var a) { return a.tape().constant(a.value()); }

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  Tape& t = parts.front().tape();
  const auto rows = parts.front().rows();
  Eigen::Index cols = 0;
  bool needs = false;
  std::vector<int> ids;
  for (auto p : parts) {
    if (p.rows() != rows) throw std::invalid_argument("concat_cols: row counts differ");
    cols += p.cols();
    needs = needs || t.requires_grad(p.id());
    ids.push_back(p.id());
  }
  Matrix out(rows, cols);
  Eigen::Index c = 0;
  for (auto p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  return t.push(std::move(out), needs, [ids](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    Eigen::Index c0 = 0;
    for (int id : ids) {
      const auto w = tp.value(id).cols();
      if (tp.requires_grad(id)) tp.grad(id) += g.middleCols(c0, w);
      c0 += w;
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  Tape& t = parts.front().tape();
  const auto cols = parts.front().cols();
  Eigen::Index rows = 0;
  bool needs = false;
  std::vector<int> ids;
  for (auto p : parts) {
    if (p.cols() != cols) throw std::invalid_argument("concat_rows: column counts differ");
    rows += p.rows();
    needs = needs || t.requires_grad(p.id());
    ids.push_back(p.id());
  }
  Matrix out(rows, cols);
  Eigen::Index r = 0;
  for (auto p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  return t.push(std::move(out), needs, [ids](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    Eigen::Index r0 = 0;
    for (int id : ids) {
      const auto h = tp.value(id).rows();
      if (tp.requires_grad(id)) tp.grad(id) += g.middleRows(r0, h);
      r0 += h;
    }
  });
}

Var slice_rows(Var a, Eigen::Index begin, Eigen::Index count) {
  if (begin < 0 || count < 0 || begin + count > a.rows()) throw std::out_of_range("slice_rows out of range");
  Tape& t = a.tape();
  const int ia = a.id();
  return t.push(a.value().middleRows(begin, count), any_grad(t, {a}), [ia, begin, count](Tape& tp, int self) {
    tp.grad(ia).middleRows(begin, count) += tp.grad(self);
  });
}

Var slice_cols(Var a, Eigen::Index begin, Eigen::Index count) {
  if (begin < 0 || count < 0 || begin + count > a.cols()) throw std::out_of_range("slice_cols out of range");
  Tape& t = a.tape();
  const int ia = a.id();
  return t.push(a.value().middleCols(begin, count), any_grad(t, {a}), [ia, begin, count](Tape& tp, int self) {
    tp.grad(ia).middleCols(begin, count) += tp.grad(self);
  });
}

Var gather_rows(Var a, std::span<const int> index) {
  Tape& t = a.tape();
  const Matrix& v = a.value();
  Matrix out(static_cast<Eigen::Index>(index.size()), v.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] < 0 || index[i] >= v.rows()) throw std::out_of_range("gather_rows index out of range");
    out.row(static_cast<Eigen::Index>(i)) = v.row(index[i]);
  }
  const int ia = a.id();
  std::vector<int> idx(index.begin(), index.end());
  return t.push(std::move(out), any_grad(t, {a}), [ia, idx = std::move(idx)](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    Matrix& ga = tp.grad(ia);
    for (std::size_t i = 0; i < idx.size(); ++i) ga.row(idx[i]) += g.row(static_cast<Eigen::Index>(i));
  });
}

Var sum(Var a) {
  Tape& t = a.tape();
  const int ia = a.id();
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return t.push(std::move(out), any_grad(t, {a}), [ia](Tape& tp, int self) {
    tp.grad(ia).array() += tp.grad(self)(0, 0);
  });
}

Var mean(Var a) {
  const auto n = static_cast<double>(a.value().size());
  return scale(sum(a), 1.0 / n);
}

Var gru_cell(Var x, Var h, Var w, Var u, Var b) {
  Tape& t = same_tape(x, h);
  const Matrix& X = x.value();
  const Matrix& H = h.value();
  const Matrix& W = w.value();
  const Matrix& U = u.value();
  const Matrix& B = b.value();
  const auto hs = H.cols();
  if (X.rows() != H.rows()) throw std::invalid_argument("gru_cell: batch sizes differ");
  if (W.rows() != X.cols() || W.cols() != 3 * hs) throw std::invalid_argument("gru_cell: input weight shape mismatch");
  if (U.rows() != hs || U.cols() != 3 * hs) throw std::invalid_argument("gru_cell: recurrent weight shape mismatch");
  if (B.rows() != 1 || B.cols() != 3 * hs) throw std::invalid_argument("gru_cell: bias shape mismatch");

  Matrix gx = X * W;
  gx.rowwise() += B.row(0);
  Matrix gh = H * U.leftCols(2 * hs);
  Matrix r = sigmoid_values(gx.leftCols(hs) + gh.leftCols(hs));
  Matrix z = sigmoid_values(gx.middleCols(hs, hs) + gh.rightCols(hs));
  Matrix rh = r.cwiseProduct(H);
  Matrix n = tanh_values(gx.rightCols(hs) + rh * U.rightCols(hs));
  Matrix out = (1.0 - z.array()) * n.array() + z.array() * H.array();

  const int ix = x.id(), ih = h.id(), iw = w.id(), iu = u.id(), ib = b.id();
  const bool needs = any_grad(t, {x, h, w, u, b});
  std::vector<Matrix> saved;
  if (needs) saved = {std::move(r), std::move(z), std::move(n), std::move(rh)};
  return t.push(
      std::move(out), needs,
      [ix, ih, iw, iu, ib, hs](Tape& tp, int self) {
        const auto& s = tp.saved(self);
        const Matrix& r = s[0];
        const Matrix& z = s[1];
        const Matrix& n = s[2];
        const Matrix& rh = s[3];
        const Matrix& X = tp.value(ix);
        const Matrix& H = tp.value(ih);
        const Matrix& W = tp.value(iw);
        const Matrix& U = tp.value(iu);
        const Matrix& G = tp.grad(self);

        Matrix dgx(G.rows(), 3 * hs);
        Matrix dn = G.cwiseProduct((1.0 - z.array()).matrix());
        dgx.rightCols(hs) = dn.array() * (1.0 - n.array().square());
        Matrix d_rh = dgx.rightCols(hs) * U.rightCols(hs).transpose();
        Matrix dr = d_rh.cwiseProduct(H);
        dgx.leftCols(hs) = dr.array() * r.array() * (1.0 - r.array());
        dgx.middleCols(hs, hs) = G.array() * (H - n).array() * z.array() * (1.0 - z.array());

        if (tp.requires_grad(ih)) {
          Matrix& dh = tp.grad(ih);
          dh += G.cwiseProduct(z) + d_rh.cwiseProduct(r);
          dh.noalias() += dgx.leftCols(2 * hs) * U.leftCols(2 * hs).transpose();
        }
        if (tp.requires_grad(iu)) {
          Matrix& du = tp.grad(iu);
          du.leftCols(2 * hs).noalias() += H.transpose() * dgx.leftCols(2 * hs);
          du.rightCols(hs).noalias() += rh.transpose() * dgx.rightCols(hs);
        }
        if (tp.requires_grad(iw)) tp.grad(iw).noalias() += X.transpose() * dgx;
        if (tp.requires_grad(ib)) tp.grad(ib) += dgx.colwise().sum();
        if (tp.requires_grad(ix)) tp.grad(ix).noalias() += dgx * W.transpose();
      },
      std::move(saved));
}

Var sigmoid_ce(Var logits, const Matrix& labels) {
  Tape& t = logits.tape();
  const Matrix& x = logits.value();
  check_same_shape(x, labels, "sigmoid_ce");
  const auto count = static_cast<double>(x.size());
  const auto loss = x.array().max(0.0) - x.array() * labels.array() + (-x.array().abs()).exp().log1p();
  Matrix out(1, 1);
  out(0, 0) = loss.sum() / count;
  const int il = logits.id();
  return t.push(
      std::move(out), any_grad(t, {logits}),
      [il, count](Tape& tp, int self) {
        const double g = tp.grad(self)(0, 0) / count;
        const Matrix& y = tp.saved(self)[0];
        tp.grad(il).array() += g * (sigmoid_values(tp.value(il)).array() - y.array());
      },
      {labels});
}

Var softmax_ce(Var logits, std::span<const int> targets) {
  Tape& t = logits.tape();
  const Matrix& x = logits.value();
  if (x.cols() < 2) throw std::invalid_argument("softmax_ce needs at least two classes");
  if (static_cast<Eigen::Index>(targets.size()) != x.rows()) throw std::invalid_argument("softmax_ce: target count");
  Matrix p = softmax_rows(x);
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const int k = targets[static_cast<std::size_t>(i)];
    if (k < 0 || k >= x.cols()) throw std::out_of_range("softmax_ce: target out of range");
    const double m = x.row(i).maxCoeff();
    const double lse = m + std::log((x.row(i).array() - m).exp().sum());
    total += lse - x(i, k);
  }
  const auto rows = static_cast<double>(x.rows());
  Matrix out(1, 1);
  out(0, 0) = total / rows;
  const int il = logits.id();
  std::vector<int> tgt(targets.begin(), targets.end());
  return t.push(
      std::move(out), any_grad(t, {logits}),
      [il, rows, tgt = std::move(tgt)](Tape& tp, int self) {
        const double g = tp.grad(self)(0, 0) / rows;
        Matrix d = tp.saved(self)[0];
        for (std::size_t i = 0; i < tgt.size(); ++i) d(static_cast<Eigen::Index>(i), tgt[i]) -= 1.0;
        tp.grad(il) += g * d;
      },
      {std::move(p)});
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    p.row(i) = (logits.row(i).array() - m).exp();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

Matrix tanh_values(const Matrix& x) {
  // tanh(x) = 1 - 2 / (exp(2x) + 1), evaluated with Eigen's vectorised exp.
  return (1.0 - 2.0 / ((2.0 * x.array()).exp() + 1.0)).matrix();
}

Matrix sigmoid_values(const Matrix& logits) {
  // exp(-x) overflows to inf for very negative x, which still yields 0.
  return (1.0 / (1.0 + (-logits.array()).exp())).matrix();
}

}  // namespace belieflab::nn
