#pragma once

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace hirevae::ad {

using Mat = Eigen::MatrixXd;

class Graph;

// Lightweight handle into a Graph. Copyable, never outlives its graph.
struct Var {
  Graph* g = nullptr;
  int id = -1;
  bool valid() const { return g != nullptr && id >= 0; }
};

// Tape-based reverse-mode autodiff over dense double matrices.
//
// A Graph is built per forward pass (one per training batch); node creation
// order is topological, so backward() is a single reverse sweep. Scalars are
// 1x1 matrices. Ops are free functions in this namespace; they dispatch on
// shape for row/scalar broadcasting where noted.
class Graph {
 public:
  explicit Graph(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Tracked leaf: gradients accumulate here.
  Var input(Mat v);
  // Untracked leaf.
  Var constant(Mat v);
  Var scalar(double s);

  void backward(Var loss);  // loss must be 1x1

  const Mat& value(Var v) const { return nodes_[v.id].value; }
  double scalar_value(Var v) const;
  // Gradient accumulated by the last backward(); zeros if untouched.
  Mat grad(Var v) const;

  bool grad_enabled() const { return grad_enabled_; }
  std::size_t size() const { return nodes_.size(); }

  // --- used by op implementations ---
  Var emit(Mat value, bool requires_grad, std::function<void(Graph&)> bp);
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
  void accumulate(int id, const Mat& delta);
  const Mat& node_grad(int id) const { return nodes_[id].grad; }
  bool grad_live(int id) const { return nodes_[id].grad_live; }

 private:
  struct Node {
    Mat value;
    Mat grad;
    bool requires_grad = false;
    bool grad_live = false;
    std::function<void(Graph&)> backprop;
  };
  std::vector<Node> nodes_;
  bool grad_enabled_;
};

// --- elementwise / broadcast arithmetic -------------------------------------
// add/sub/mul/div accept: same shape, b 1x1 (scalar broadcast), or b a row
// vector 1xN against a MxN (row broadcast).
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);

Var scale(Var a, double k);
Var add_scalar(Var a, double k);
inline Var neg(Var a) { return scale(a, -1.0); }

// --- linear algebra ----------------------------------------------------------
Var matmul(Var a, Var b);
Var transpose(Var a);

// --- nonlinearities ----------------------------------------------------------
Var tanh(Var a);
Var sigmoid(Var a);
Var softplus(Var a);
Var exp(Var a);
Var log(Var a);
Var square(Var a);

// --- reductions --------------------------------------------------------------
Var sum(Var a);           // -> 1x1
Var mean(Var a);          // -> 1x1
Var colwise_mean(Var a);  // MxN -> 1xN

// --- shape ops ---------------------------------------------------------------
Var concat_cols(const std::vector<Var>& vs);  // equal rows
Var concat_rows(const std::vector<Var>& vs);  // equal cols
Var slice_cols(Var a, int col0, int ncols);
Var slice_rows(Var a, int row0, int nrows);
Var repeat_row(Var row, int nrows);                    // 1xN -> MxN
Var permute_cols(Var a, const std::vector<int>& perm);  // out[:,j] = a[:,perm[j]]
Var cell(Var a, int i, int j);                          // -> 1x1
Var softmax_col(Var a);                                 // Mx1 -> Mx1
Var stop_grad(Var a);

// --- sugar --------------------------------------------------------------------
inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator/(Var a, Var b) { return div(a, b); }
inline Var operator*(Var a, double k) { return scale(a, k); }
inline Var operator*(double k, Var a) { return scale(a, k); }
inline Var operator+(Var a, double k) { return add_scalar(a, k); }
inline Var operator+(double k, Var a) { return add_scalar(a, k); }
inline Var operator-(Var a, double k) { return add_scalar(a, -k); }
inline Var operator-(double k, Var a) { return add_scalar(neg(a), k); }
inline Var operator-(Var a) { return neg(a); }

bool all_finite(const Mat& m);

}  // namespace hirevae::ad
