#pragma once

#include "hirevae/autodiff.hpp"
#include "hirevae/params.hpp"

#include <cstdint>
#include <string>

namespace hirevae {

// Floor added to every softplus std head; keeps KL terms bounded.
constexpr double kSigmaFloor = 1e-4;

// Diagonal Gaussian over rows: mean/std are [B x dim], std > 0 elementwise.
struct GaussianParams {
  Eigen::MatrixXd mean;
  Eigen::MatrixXd std;
};

struct GaussianVars {
  ad::Var mean;
  ad::Var std;
};

// tanh trunk + affine mean head + softplus std head (plus floor).
class GaussianHead {
 public:
  GaussianHead() = default;
  GaussianHead(const std::string& path, int in_dim, int trunk_dim, int out_dim,
               std::uint64_t seed);
  void register_in(ParamRegistry& reg);

  // input [B x in_dim] -> means/stds [B x out_dim]
  GaussianVars forward(ad::Graph& g, Binder& bind, ad::Var input);
  GaussianParams forward_values(const Eigen::MatrixXd& input);

  int in_dim() const { return in_dim_; }
  int out_dim() const { return out_dim_; }

  Parameter w1, b1, w_mu, b_mu, w_sig, b_sig;
  double sigma_floor = kSigmaFloor;

 private:
  int in_dim_ = 0, trunk_dim_ = 0, out_dim_ = 0;
};

// value = mean + std .* noise
ad::Var reparam_sample(GaussianVars p, ad::Var noise);
Eigen::MatrixXd reparam_sample(const GaussianParams& p, const Eigen::MatrixXd& noise);

// Elementwise KL( N(mu_p, sig_p^2) || N(mu_q, sig_q^2) ); callers reduce.
ad::Var kl_diag(GaussianVars p, GaussianVars q);

// Sum over all entries; the closed form per element is
//   ln(sig_q/sig_p) + (sig_p^2 + (mu_p - mu_q)^2) / (2 sig_q^2) - 1/2
double gaussian_kl(const GaussianParams& p, const GaussianParams& q);
double gaussian_kl_1d(double mu_p, double sig_p, double mu_q, double sig_q);

// Head-input builders shared by the hierarchy wiring.
ad::Var with_scalar_col(ad::Graph& g, ad::Var v, double scalar);       // [1xH] -> [1x(H+1)]
ad::Var broadcast_concat(ad::Graph& g, ad::Var row, ad::Var per_stock);  // [1xA],[NxB] -> [Nx(A+B)]

}  // namespace hirevae
