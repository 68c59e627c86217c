#include "hirevae/hier_latent.hpp"

#include <cmath>
#include <stdexcept>

namespace hirevae {

using ad::Var;

GaussianHead::GaussianHead(const std::string& path, int in_dim, int trunk_dim, int out_dim,
                           std::uint64_t seed)
    : w1(make_param(path + ".w1", in_dim, trunk_dim, Init::Xavier, seed)),
      b1(make_param(path + ".b1", 1, trunk_dim, Init::Zero, seed)),
      w_mu(make_param(path + ".w_mu", trunk_dim, out_dim, Init::Xavier, seed)),
      b_mu(make_param(path + ".b_mu", 1, out_dim, Init::Zero, seed)),
      w_sig(make_param(path + ".w_sig", trunk_dim, out_dim, Init::Xavier, seed)),
      b_sig(make_param(path + ".b_sig", 1, out_dim, Init::Zero, seed)),
      in_dim_(in_dim),
      trunk_dim_(trunk_dim),
      out_dim_(out_dim) {}

void GaussianHead::register_in(ParamRegistry& reg) {
  reg.add(&w1);
  reg.add(&b1);
  reg.add(&w_mu);
  reg.add(&b_mu);
  reg.add(&w_sig);
  reg.add(&b_sig);
}

GaussianVars GaussianHead::forward(ad::Graph& g, Binder& bind, Var input) {
  if (!ad::all_finite(g.value(input)))
    throw std::invalid_argument("gaussian head: non-finite input");
  if (g.value(input).cols() != in_dim_)
    throw std::invalid_argument("gaussian head: input width " +
                                std::to_string(g.value(input).cols()) + ", expected " +
                                std::to_string(in_dim_));
  Var h = ad::tanh(ad::matmul(input, bind(w1)) + bind(b1));
  Var mu = ad::matmul(h, bind(w_mu)) + bind(b_mu);
  Var sig = ad::softplus(ad::matmul(h, bind(w_sig)) + bind(b_sig)) + sigma_floor;
  return {mu, sig};
}

GaussianParams GaussianHead::forward_values(const Eigen::MatrixXd& input) {
  ad::Graph g(false);
  Binder bind(g);
  GaussianVars out = forward(g, bind, g.constant(input));
  return {g.value(out.mean), g.value(out.std)};
}

Var reparam_sample(GaussianVars p, ad::Var noise) {
  ad::Graph& g = *p.mean.g;
  const auto& m = g.value(p.mean);
  const auto& n = g.value(noise);
  if (m.rows() != n.rows() || m.cols() != n.cols())
    throw std::invalid_argument("reparam_sample: noise shape mismatch");
  return p.mean + p.std * noise;
}

Eigen::MatrixXd reparam_sample(const GaussianParams& p, const Eigen::MatrixXd& noise) {
  if (p.mean.rows() != noise.rows() || p.mean.cols() != noise.cols())
    throw std::invalid_argument("reparam_sample: noise shape mismatch");
  return p.mean + p.std.cwiseProduct(noise);
}

Var kl_diag(GaussianVars p, GaussianVars q) {
  Var ratio = ad::log(q.std) - ad::log(p.std);
  Var quad = (ad::square(p.std) + ad::square(p.mean - q.mean)) / (2.0 * ad::square(q.std));
  return ratio + quad - 0.5;
}

double gaussian_kl_1d(double mu_p, double sig_p, double mu_q, double sig_q) {
  if (!(sig_p > 0.0) || !(sig_q > 0.0))
    throw std::invalid_argument("gaussian_kl: stds must be positive");
  const double dm = mu_p - mu_q;
  return std::log(sig_q / sig_p) + (sig_p * sig_p + dm * dm) / (2.0 * sig_q * sig_q) - 0.5;
}

double gaussian_kl(const GaussianParams& p, const GaussianParams& q) {
  if (p.mean.rows() != q.mean.rows() || p.mean.cols() != q.mean.cols())
    throw std::invalid_argument("gaussian_kl: dimension mismatch");
  double total = 0.0;
  for (Eigen::Index i = 0; i < p.mean.rows(); ++i)
    for (Eigen::Index j = 0; j < p.mean.cols(); ++j)
      total += gaussian_kl_1d(p.mean(i, j), p.std(i, j), q.mean(i, j), q.std(i, j));
  return total;
}

Var with_scalar_col(ad::Graph& g, Var v, double scalar) {
  return ad::concat_cols({v, g.constant(Eigen::MatrixXd::Constant(1, 1, scalar))});
}

Var broadcast_concat(ad::Graph& g, Var row, Var per_stock) {
  const int n = static_cast<int>(g.value(per_stock).rows());
  return ad::concat_cols({ad::repeat_row(row, n), per_stock});
}

}  // namespace hirevae
