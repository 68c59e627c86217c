#include <doctest.h>

#include "hirevae/autodiff.hpp"
#include "hirevae/rng.hpp"
#include "oracles.hpp"

#include <functional>

using namespace hirevae;
using ad::Mat;
using ad::Var;

namespace {

Mat random_mat(int r, int c, Rng& rng, double scale = 1.0) {
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = scale * rng.gaussian();
  return m;
}

// FD-checks d(sum of op output)/d(each input entry) against backward()
void check_op_gradient(const std::function<Var(ad::Graph&, const std::vector<Var>&)>& op,
                       std::vector<Mat> inputs, double tol = 1e-7) {
  auto eval = [&](const std::vector<Mat>& ins) {
    ad::Graph g(true);
    std::vector<Var> vs;
    for (const auto& m : ins) vs.push_back(g.input(m));
    return g.scalar_value(ad::sum(op(g, vs)));
  };

  ad::Graph g(true);
  std::vector<Var> vs;
  for (const auto& m : inputs) vs.push_back(g.input(m));
  Var loss = ad::sum(op(g, vs));
  g.backward(loss);

  const double h = 1e-6;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Mat analytic = g.grad(vs[k]);
    for (int i = 0; i < inputs[k].rows(); ++i) {
      for (int j = 0; j < inputs[k].cols(); ++j) {
        auto pert = inputs;
        pert[k](i, j) += h;
        const double up = eval(pert);
        pert[k](i, j) -= 2 * h;
        const double dn = eval(pert);
        const double fd = (up - dn) / (2 * h);
        CAPTURE(k);
        CAPTURE(i);
        CAPTURE(j);
        CHECK(oracles::rel_err(fd, analytic(i, j)) < tol);
      }
    }
  }
}

}  // namespace

TEST_CASE("backward through matmul chain matches finite differences") {
  Rng rng(11);
  check_op_gradient(
      [](ad::Graph&, const std::vector<Var>& v) { return ad::matmul(v[0], v[1]); },
      {random_mat(3, 4, rng), random_mat(4, 2, rng)});
}

TEST_CASE("elementwise ops match finite differences") {
  Rng rng(12);
  check_op_gradient([](ad::Graph&, const std::vector<Var>& v) { return v[0] * v[1]; },
                    {random_mat(3, 3, rng), random_mat(3, 3, rng)});
  check_op_gradient([](ad::Graph&, const std::vector<Var>& v) { return v[0] / v[1]; },
                    {random_mat(2, 3, rng), random_mat(2, 3, rng, 0.3).array().abs().matrix() +
                                                Mat::Constant(2, 3, 1.0)});
  check_op_gradient([](ad::Graph&, const std::vector<Var>& v) { return v[0] - v[1]; },
                    {random_mat(2, 2, rng), random_mat(2, 2, rng)});
}

TEST_CASE("row and scalar broadcasting gradients reduce correctly") {
  Rng rng(13);
  check_op_gradient([](ad::Graph&, const std::vector<Var>& v) { return v[0] + v[1]; },
                    {random_mat(4, 3, rng), random_mat(1, 3, rng)});
  check_op_gradient([](ad::Graph&, const std::vector<Var>& v) { return v[0] * v[1]; },
                    {random_mat(4, 3, rng), random_mat(1, 3, rng)});
  check_op_gradient([](ad::Graph&, const std::vector<Var>& v) { return v[0] + v[1]; },
                    {random_mat(4, 3, rng), random_mat(1, 1, rng)});
}

TEST_CASE("nonlinearities match finite differences") {
  Rng rng(14);
  for (auto op : {+[](Var x) { return ad::tanh(x); }, +[](Var x) { return ad::sigmoid(x); },
                  +[](Var x) { return ad::softplus(x); }, +[](Var x) { return ad::exp(x); },
                  +[](Var x) { return ad::square(x); }}) {
    check_op_gradient([op](ad::Graph&, const std::vector<Var>& v) { return op(v[0]); },
                      {random_mat(3, 3, rng)});
  }
  check_op_gradient([](ad::Graph&, const std::vector<Var>& v) { return ad::log(v[0]); },
                    {random_mat(3, 3, rng, 0.2).array().abs().matrix() +
                     Mat::Constant(3, 3, 0.5)});
}

TEST_CASE("shape ops match finite differences") {
  Rng rng(15);
  check_op_gradient(
      [](ad::Graph&, const std::vector<Var>& v) {
        return ad::square(ad::concat_cols({v[0], v[1]}));
      },
      {random_mat(3, 2, rng), random_mat(3, 4, rng)});
  check_op_gradient(
      [](ad::Graph&, const std::vector<Var>& v) {
        return ad::square(ad::concat_rows({v[0], v[1]}));
      },
      {random_mat(2, 3, rng), random_mat(4, 3, rng)});
  check_op_gradient(
      [](ad::Graph&, const std::vector<Var>& v) {
        return ad::square(ad::slice_cols(v[0], 1, 2));
      },
      {random_mat(3, 5, rng)});
  check_op_gradient(
      [](ad::Graph&, const std::vector<Var>& v) {
        return ad::square(ad::slice_rows(v[0], 1, 2));
      },
      {random_mat(5, 3, rng)});
  check_op_gradient(
      [](ad::Graph&, const std::vector<Var>& v) {
        return ad::square(ad::repeat_row(v[0], 4));
      },
      {random_mat(1, 3, rng)});
  check_op_gradient(
      [](ad::Graph&, const std::vector<Var>& v) {
        return ad::square(ad::permute_cols(v[0], {2, 0, 1}));
      },
      {random_mat(2, 3, rng)});
  check_op_gradient(
      [](ad::Graph&, const std::vector<Var>& v) { return ad::square(ad::transpose(v[0])); },
      {random_mat(3, 4, rng)});
  check_op_gradient(
      [](ad::Graph&, const std::vector<Var>& v) { return ad::cell(v[0], 1, 2); },
      {random_mat(3, 4, rng)});
  check_op_gradient(
      [](ad::Graph&, const std::vector<Var>& v) { return ad::square(ad::softmax_col(v[0])); },
      {random_mat(5, 1, rng)});
  check_op_gradient(
      [](ad::Graph&, const std::vector<Var>& v) { return ad::colwise_mean(ad::square(v[0])); },
      {random_mat(4, 3, rng)});
  check_op_gradient([](ad::Graph&, const std::vector<Var>& v) { return ad::mean(v[0]); },
                    {random_mat(4, 3, rng)});
}

TEST_CASE("softmax_col normalizes and is shift invariant") {
  ad::Graph g(false);
  Mat logits(4, 1);
  logits << 0.3, -1.2, 2.0, 0.0;
  const Mat p = g.value(ad::softmax_col(g.constant(logits)));
  CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-12));
  const Mat p2 = g.value(ad::softmax_col(g.constant(Mat(logits.array() + 5.0))));
  CHECK((p - p2).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("stop_grad blocks the backward path") {
  ad::Graph g(true);
  Var x = g.input(Mat::Constant(2, 2, 1.5));
  Var loss = ad::sum(ad::stop_grad(ad::square(x)) * x);
  g.backward(loss);
  // d/dx of (const * x) = const = x^2 values
  CHECK(g.grad(x)(0, 0) == doctest::Approx(2.25));

  ad::Graph g2(true);
  Var y = g2.input(Mat::Constant(2, 2, 1.5));
  Var loss2 = ad::sum(ad::stop_grad(y));
  g2.backward(loss2);
  CHECK(g2.grad(y).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gradient accumulates over reused nodes") {
  ad::Graph g(true);
  Var x = g.input(Mat::Constant(1, 1, 3.0));
  Var loss = x * x + x;  // d/dx = 2x + 1 = 7
  g.backward(loss);
  CHECK(g.grad(x)(0, 0) == doctest::Approx(7.0));
}

TEST_CASE("shape mismatches and invalid calls throw") {
  ad::Graph g(true);
  Var a = g.input(Mat::Zero(2, 3));
  Var b = g.input(Mat::Zero(3, 3));
  CHECK_THROWS_AS((void)ad::add(a, b), std::invalid_argument);
  CHECK_THROWS_AS((void)ad::matmul(a, a), std::invalid_argument);
  CHECK_THROWS_AS(g.backward(a), std::invalid_argument);  // non-scalar loss
  ad::Graph frozen(false);
  Var c = frozen.input(Mat::Zero(1, 1));
  CHECK_THROWS_AS(frozen.backward(c), std::logic_error);
}
