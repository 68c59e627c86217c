#include "hirevae/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace hirevae::ad {

namespace {

enum class Bcast { Same, Scalar, Row };

Bcast broadcast_kind(const Mat& a, const Mat& b) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) return Bcast::Same;
  if (b.rows() == 1 && b.cols() == 1) return Bcast::Scalar;
  if (b.rows() == 1 && b.cols() == a.cols()) return Bcast::Row;
  throw std::invalid_argument("ad: incompatible shapes " +
                              std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " vs " +
                              std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
}

Mat broadcast_to(const Mat& b, Eigen::Index rows, Eigen::Index cols, Bcast kind) {
  switch (kind) {
    case Bcast::Same:
      return b;
    case Bcast::Scalar:
      return Mat::Constant(rows, cols, b(0, 0));
    case Bcast::Row:
      return b.replicate(rows, 1);
  }
  return b;
}

// Reduce a full-shape gradient back to the broadcast operand's shape.
Mat reduce_to(const Mat& g, Bcast kind) {
  switch (kind) {
    case Bcast::Same:
      return g;
    case Bcast::Scalar:
      return Mat::Constant(1, 1, g.sum());
    case Bcast::Row:
      return g.colwise().sum();
  }
  return g;
}

void check_valid(Var v) {
  if (!v.valid()) throw std::invalid_argument("ad: invalid Var handle");
}

void check_same_graph(Var a, Var b) {
  check_valid(a);
  check_valid(b);
  if (a.g != b.g) throw std::invalid_argument("ad: Vars belong to different graphs");
}

}  // namespace

Var Graph::input(Mat v) {
  nodes_.push_back(Node{std::move(v), {}, grad_enabled_, false, nullptr});
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Graph::constant(Mat v) {
  nodes_.push_back(Node{std::move(v), {}, false, false, nullptr});
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Graph::scalar(double s) {
  return constant(Mat::Constant(1, 1, s));
}

Var Graph::emit(Mat value, bool requires_grad, std::function<void(Graph&)> bp) {
  requires_grad = requires_grad && grad_enabled_;
  nodes_.push_back(Node{std::move(value), {}, requires_grad,
                        false, requires_grad ? std::move(bp) : nullptr});
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

void Graph::accumulate(int id, const Mat& delta) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return;
  if (!n.grad_live) {
    n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    n.grad_live = true;
  }
  n.grad += delta;
}

void Graph::backward(Var loss) {
  check_valid(loss);
  if (!grad_enabled_) throw std::logic_error("ad: backward() on a grad-disabled graph");
  const Mat& lv = nodes_[loss.id].value;
  if (lv.rows() != 1 || lv.cols() != 1)
    throw std::invalid_argument("ad: backward() needs a 1x1 loss");
  accumulate(loss.id, Mat::Ones(1, 1));
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.grad_live && n.backprop) n.backprop(*this);
  }
}

double Graph::scalar_value(Var v) const {
  const Mat& m = nodes_[v.id].value;
  if (m.rows() != 1 || m.cols() != 1) throw std::invalid_argument("ad: not a scalar node");
  return m(0, 0);
}

Mat Graph::grad(Var v) const {
  const Node& n = nodes_[v.id];
  if (n.grad_live) return n.grad;
  return Mat::Zero(n.value.rows(), n.value.cols());
}

// --- binary elementwise ------------------------------------------------------

Var add(Var a, Var b) {
  check_same_graph(a, b);
  Graph& g = *a.g;
  const Mat& av = g.value(a);
  const Mat& bv = g.value(b);
  const Bcast kind = broadcast_kind(av, bv);
  Mat out = av + broadcast_to(bv, av.rows(), av.cols(), kind);
  const bool rg = g.requires_grad(a) || g.requires_grad(b);
  const int ia = a.id, ib = b.id, self = static_cast<int>(g.size());
  return g.emit(std::move(out), rg, [ia, ib, self, kind](Graph& gr) {
    const Mat& d = gr.node_grad(self);
    gr.accumulate(ia, d);
    gr.accumulate(ib, reduce_to(d, kind));
  });
}

Var sub(Var a, Var b) {
  check_same_graph(a, b);
  Graph& g = *a.g;
  const Mat& av = g.value(a);
  const Mat& bv = g.value(b);
  const Bcast kind = broadcast_kind(av, bv);
  Mat out = av - broadcast_to(bv, av.rows(), av.cols(), kind);
  const bool rg = g.requires_grad(a) || g.requires_grad(b);
  const int ia = a.id, ib = b.id, self = static_cast<int>(g.size());
  return g.emit(std::move(out), rg, [ia, ib, self, kind](Graph& gr) {
    const Mat& d = gr.node_grad(self);
    gr.accumulate(ia, d);
    gr.accumulate(ib, -reduce_to(d, kind));
  });
}

Var mul(Var a, Var b) {
  check_same_graph(a, b);
  Graph& g = *a.g;
  const Mat& av = g.value(a);
  const Mat& bv = g.value(b);
  const Bcast kind = broadcast_kind(av, bv);
  Mat bb = broadcast_to(bv, av.rows(), av.cols(), kind);
  Mat out = av.cwiseProduct(bb);
  const bool rg = g.requires_grad(a) || g.requires_grad(b);
  const int ia = a.id, ib = b.id, self = static_cast<int>(g.size());
  return g.emit(std::move(out), rg, [ia, ib, self, kind](Graph& gr) {
    const Mat& d = gr.node_grad(self);
    const Mat& av2 = gr.value(Var{&gr, ia});
    const Mat& bv2 = gr.value(Var{&gr, ib});
    Mat bb2 = broadcast_to(bv2, av2.rows(), av2.cols(), kind);
    gr.accumulate(ia, d.cwiseProduct(bb2));
    gr.accumulate(ib, reduce_to(d.cwiseProduct(av2), kind));
  });
}

Var div(Var a, Var b) {
  check_same_graph(a, b);
  Graph& g = *a.g;
  const Mat& av = g.value(a);
  const Mat& bv = g.value(b);
  const Bcast kind = broadcast_kind(av, bv);
  Mat bb = broadcast_to(bv, av.rows(), av.cols(), kind);
  Mat out = av.cwiseQuotient(bb);
  const bool rg = g.requires_grad(a) || g.requires_grad(b);
  const int ia = a.id, ib = b.id, self = static_cast<int>(g.size());
  return g.emit(std::move(out), rg, [ia, ib, self, kind](Graph& gr) {
    const Mat& d = gr.node_grad(self);
    const Mat& av2 = gr.value(Var{&gr, ia});
    const Mat& bv2 = gr.value(Var{&gr, ib});
    Mat bb2 = broadcast_to(bv2, av2.rows(), av2.cols(), kind);
    gr.accumulate(ia, d.cwiseQuotient(bb2));
    Mat db_full = -d.cwiseProduct(av2).cwiseQuotient(bb2.cwiseProduct(bb2));
    gr.accumulate(ib, reduce_to(db_full, kind));
  });
}

Var scale(Var a, double k) {
  check_valid(a);
  Graph& g = *a.g;
  Mat out = g.value(a) * k;
  const int ia = a.id, self = static_cast<int>(g.size());
  return g.emit(std::move(out), g.requires_grad(a), [ia, self, k](Graph& gr) {
    gr.accumulate(ia, gr.node_grad(self) * k);
  });
}

Var add_scalar(Var a, double k) {
  check_valid(a);
  Graph& g = *a.g;
  Mat out = g.value(a).array() + k;
  const int ia = a.id, self = static_cast<int>(g.size());
  return g.emit(std::move(out), g.requires_grad(a), [ia, self](Graph& gr) {
    gr.accumulate(ia, gr.node_grad(self));
  });
}

// --- linear algebra ------------------------------------------------------------

Var matmul(Var a, Var b) {
  check_same_graph(a, b);
  Graph& g = *a.g;
  const Mat& av = g.value(a);
  const Mat& bv = g.value(b);
  if (av.cols() != bv.rows())
    throw std::invalid_argument("ad: matmul inner dimensions disagree");
  Mat out = av * bv;
  const bool rg = g.requires_grad(a) || g.requires_grad(b);
  const int ia = a.id, ib = b.id, self = static_cast<int>(g.size());
  return g.emit(std::move(out), rg, [ia, ib, self](Graph& gr) {
    const Mat& d = gr.node_grad(self);
    gr.accumulate(ia, d * gr.value(Var{&gr, ib}).transpose());
    gr.accumulate(ib, gr.value(Var{&gr, ia}).transpose() * d);
  });
}

Var transpose(Var a) {
  check_valid(a);
  Graph& g = *a.g;
  Mat out = g.value(a).transpose();
  const int ia = a.id, self = static_cast<int>(g.size());
  return g.emit(std::move(out), g.requires_grad(a), [ia, self](Graph& gr) {
    gr.accumulate(ia, gr.node_grad(self).transpose());
  });
}

// --- nonlinearities --------------------------------------------------------------

Var tanh(Var a) {
  check_valid(a);
  Graph& g = *a.g;
  Mat out = g.value(a).array().tanh();
  const int ia = a.id, self = static_cast<int>(g.size());
  return g.emit(std::move(out), g.requires_grad(a), [ia, self](Graph& gr) {
    const Mat& y = gr.value(Var{&gr, self});
    Mat d = gr.node_grad(self).array() * (1.0 - y.array().square());
    gr.accumulate(ia, d);
  });
}

Var sigmoid(Var a) {
  check_valid(a);
  Graph& g = *a.g;
  Mat out = (1.0 / (1.0 + (-g.value(a)).array().exp())).matrix();
  const int ia = a.id, self = static_cast<int>(g.size());
  return g.emit(std::move(out), g.requires_grad(a), [ia, self](Graph& gr) {
    const Mat& y = gr.value(Var{&gr, self});
    Mat d = gr.node_grad(self).array() * y.array() * (1.0 - y.array());
    gr.accumulate(ia, d);
  });
}

// log(1+e^x), computed as max(x,0) + log1p(e^-|x|) for stability
Var softplus(Var a) {
  check_valid(a);
  Graph& g = *a.g;
  Mat out = g.value(a).unaryExpr([](double x) {
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
  });
  const int ia = a.id, self = static_cast<int>(g.size());
  return g.emit(std::move(out), g.requires_grad(a), [ia, self](Graph& gr) {
    const Mat& x = gr.value(Var{&gr, ia});
    Mat sig = (1.0 / (1.0 + (-x).array().exp())).matrix();
    gr.accumulate(ia, gr.node_grad(self).cwiseProduct(sig));
  });
}

Var exp(Var a) {
  check_valid(a);
  Graph& g = *a.g;
  Mat out = g.value(a).array().exp();
  const int ia = a.id, self = static_cast<int>(g.size());
  return g.emit(std::move(out), g.requires_grad(a), [ia, self](Graph& gr) {
    const Mat& y = gr.value(Var{&gr, self});
    gr.accumulate(ia, gr.node_grad(self).cwiseProduct(y));
  });
}

Var log(Var a) {
  check_valid(a);
  Graph& g = *a.g;
  Mat out = g.value(a).array().log();
  const int ia = a.id, self = static_cast<int>(g.size());
  return g.emit(std::move(out), g.requires_grad(a), [ia, self](Graph& gr) {
    const Mat& x = gr.value(Var{&gr, ia});
    gr.accumulate(ia, gr.node_grad(self).cwiseQuotient(x));
  });
}

Var square(Var a) {
  check_valid(a);
  Graph& g = *a.g;
  Mat out = g.value(a).array().square();
  const int ia = a.id, self = static_cast<int>(g.size());
  return g.emit(std::move(out), g.requires_grad(a), [ia, self](Graph& gr) {
    const Mat& x = gr.value(Var{&gr, ia});
    gr.accumulate(ia, 2.0 * gr.node_grad(self).cwiseProduct(x));
  });
}

// --- reductions --------------------------------------------------------------------

Var sum(Var a) {
  check_valid(a);
  Graph& g = *a.g;
  Mat out = Mat::Constant(1, 1, g.value(a).sum());
  const int ia = a.id, self = static_cast<int>(g.size());
  return g.emit(std::move(out), g.requires_grad(a), [ia, self](Graph& gr) {
    const Mat& x = gr.value(Var{&gr, ia});
    gr.accumulate(ia, Mat::Constant(x.rows(), x.cols(), gr.node_grad(self)(0, 0)));
  });
}

Var mean(Var a) {
  check_valid(a);
  Graph& g = *a.g;
  const double n = static_cast<double>(g.value(a).size());
  Mat out = Mat::Constant(1, 1, g.value(a).sum() / n);
  const int ia = a.id, self = static_cast<int>(g.size());
  return g.emit(std::move(out), g.requires_grad(a), [ia, self, n](Graph& gr) {
    const Mat& x = gr.value(Var{&gr, ia});
    gr.accumulate(ia, Mat::Constant(x.rows(), x.cols(), gr.node_grad(self)(0, 0) / n));
  });
}

Var colwise_mean(Var a) {
  check_valid(a);
  Graph& g = *a.g;
  const double m = static_cast<double>(g.value(a).rows());
  Mat out = g.value(a).colwise().mean();
  const int ia = a.id, self = static_cast<int>(g.size());
  return g.emit(std::move(out), g.requires_grad(a), [ia, self, m](Graph& gr) {
    const Mat& d = gr.node_grad(self);
    const Mat& x = gr.value(Var{&gr, ia});
    gr.accumulate(ia, (d / m).replicate(x.rows(), 1));
  });
}

// --- shape ops ------------------------------------------------------------------------

Var concat_cols(const std::vector<Var>& vs) {
  if (vs.empty()) throw std::invalid_argument("ad: concat_cols of nothing");
  Graph& g = *vs.front().g;
  Eigen::Index rows = g.value(vs.front()).rows();
  Eigen::Index cols = 0;
  bool rg = false;
  for (Var v : vs) {
    check_same_graph(vs.front(), v);
    if (g.value(v).rows() != rows)
      throw std::invalid_argument("ad: concat_cols row mismatch");
    cols += g.value(v).cols();
    rg = rg || g.requires_grad(v);
  }
  Mat out(rows, cols);
  std::vector<int> ids;
  std::vector<int> offsets;
  Eigen::Index at = 0;
  for (Var v : vs) {
    const Mat& m = g.value(v);
    out.middleCols(at, m.cols()) = m;
    ids.push_back(v.id);
    offsets.push_back(static_cast<int>(at));
    at += m.cols();
  }
  const int self = static_cast<int>(g.size());
  return g.emit(std::move(out), rg, [ids, offsets, self](Graph& gr) {
    const Mat& d = gr.node_grad(self);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      const Mat& m = gr.value(Var{&gr, ids[k]});
      gr.accumulate(ids[k], d.middleCols(offsets[k], m.cols()));
    }
  });
}

Var concat_rows(const std::vector<Var>& vs) {
  if (vs.empty()) throw std::invalid_argument("ad: concat_rows of nothing");
  Graph& g = *vs.front().g;
  Eigen::Index cols = g.value(vs.front()).cols();
  Eigen::Index rows = 0;
  bool rg = false;
  for (Var v : vs) {
    check_same_graph(vs.front(), v);
    if (g.value(v).cols() != cols)
      throw std::invalid_argument("ad: concat_rows col mismatch");
    rows += g.value(v).rows();
    rg = rg || g.requires_grad(v);
  }
  Mat out(rows, cols);
  std::vector<int> ids;
  std::vector<int> offsets;
  Eigen::Index at = 0;
  for (Var v : vs) {
    const Mat& m = g.value(v);
    out.middleRows(at, m.rows()) = m;
    ids.push_back(v.id);
    offsets.push_back(static_cast<int>(at));
    at += m.rows();
  }
  const int self = static_cast<int>(g.size());
  return g.emit(std::move(out), rg, [ids, offsets, self](Graph& gr) {
    const Mat& d = gr.node_grad(self);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      const Mat& m = gr.value(Var{&gr, ids[k]});
      gr.accumulate(ids[k], d.middleRows(offsets[k], m.rows()));
    }
  });
}

Var slice_cols(Var a, int col0, int ncols) {
  check_valid(a);
  Graph& g = *a.g;
  const Mat& av = g.value(a);
  if (col0 < 0 || ncols < 0 || col0 + ncols > av.cols())
    throw std::invalid_argument("ad: slice_cols out of range");
  Mat out = av.middleCols(col0, ncols);
  const int ia = a.id, self = static_cast<int>(g.size());
  return g.emit(std::move(out), g.requires_grad(a), [ia, self, col0, ncols](Graph& gr) {
    const Mat& x = gr.value(Var{&gr, ia});
    Mat d = Mat::Zero(x.rows(), x.cols());
    d.middleCols(col0, ncols) = gr.node_grad(self);
    gr.accumulate(ia, d);
  });
}

Var slice_rows(Var a, int row0, int nrows) {
  check_valid(a);
  Graph& g = *a.g;
  const Mat& av = g.value(a);
  if (row0 < 0 || nrows < 0 || row0 + nrows > av.rows())
    throw std::invalid_argument("ad: slice_rows out of range");
  Mat out = av.middleRows(row0, nrows);
  const int ia = a.id, self = static_cast<int>(g.size());
  return g.emit(std::move(out), g.requires_grad(a), [ia, self, row0, nrows](Graph& gr) {
    const Mat& x = gr.value(Var{&gr, ia});
    Mat d = Mat::Zero(x.rows(), x.cols());
    d.middleRows(row0, nrows) = gr.node_grad(self);
    gr.accumulate(ia, d);
  });
}

Var repeat_row(Var row, int nrows) {
  check_valid(row);
  Graph& g = *row.g;
  const Mat& rv = g.value(row);
  if (rv.rows() != 1) throw std::invalid_argument("ad: repeat_row needs a 1xN input");
  Mat out = rv.replicate(nrows, 1);
  const int ia = row.id, self = static_cast<int>(g.size());
  return g.emit(std::move(out), g.requires_grad(row), [ia, self](Graph& gr) {
    gr.accumulate(ia, gr.node_grad(self).colwise().sum());
  });
}

Var permute_cols(Var a, const std::vector<int>& perm) {
  check_valid(a);
  Graph& g = *a.g;
  const Mat& av = g.value(a);
  if (static_cast<Eigen::Index>(perm.size()) != av.cols())
    throw std::invalid_argument("ad: permutation size mismatch");
  Mat out(av.rows(), av.cols());
  for (std::size_t j = 0; j < perm.size(); ++j) out.col(j) = av.col(perm[j]);
  const int ia = a.id, self = static_cast<int>(g.size());
  return g.emit(std::move(out), g.requires_grad(a), [ia, self, perm](Graph& gr) {
    const Mat& d = gr.node_grad(self);
    Mat dx = Mat::Zero(d.rows(), d.cols());
    for (std::size_t j = 0; j < perm.size(); ++j) dx.col(perm[j]) += d.col(j);
    gr.accumulate(ia, dx);
  });
}

Var cell(Var a, int i, int j) {
  check_valid(a);
  Graph& g = *a.g;
  const Mat& av = g.value(a);
  if (i < 0 || j < 0 || i >= av.rows() || j >= av.cols())
    throw std::invalid_argument("ad: cell index out of range");
  Mat out = Mat::Constant(1, 1, av(i, j));
  const int ia = a.id, self = static_cast<int>(g.size());
  return g.emit(std::move(out), g.requires_grad(a), [ia, self, i, j](Graph& gr) {
    const Mat& x = gr.value(Var{&gr, ia});
    Mat d = Mat::Zero(x.rows(), x.cols());
    d(i, j) = gr.node_grad(self)(0, 0);
    gr.accumulate(ia, d);
  });
}

Var softmax_col(Var a) {
  check_valid(a);
  Graph& g = *a.g;
  const Mat& av = g.value(a);
  if (av.cols() != 1) throw std::invalid_argument("ad: softmax_col needs an Mx1 input");
  const double mx = av.maxCoeff();
  Eigen::ArrayXd e = (av.col(0).array() - mx).exp();
  Mat out = (e / e.sum()).matrix();
  const int ia = a.id, self = static_cast<int>(g.size());
  return g.emit(std::move(out), g.requires_grad(a), [ia, self](Graph& gr) {
    const Mat& p = gr.value(Var{&gr, self});
    const Mat& d = gr.node_grad(self);
    const double dot = (p.array() * d.array()).sum();
    Mat dx = (p.array() * (d.array() - dot)).matrix();
    gr.accumulate(ia, dx);
  });
}

Var stop_grad(Var a) {
  check_valid(a);
  Graph& g = *a.g;
  return g.constant(g.value(a));
}

bool all_finite(const Mat& m) {
  return m.allFinite();
}

}  // namespace hirevae::ad
