#include "hirevae/factor_decoder.hpp"

#include <cmath>
#include <stdexcept>

namespace hirevae {

using ad::Var;

namespace {
constexpr double kHalfLog2Pi = 0.9189385332046727;

Eigen::VectorXd mask_to_vector(const std::vector<std::uint8_t>& mask) {
  Eigen::VectorXd m(static_cast<Eigen::Index>(mask.size()));
  for (std::size_t i = 0; i < mask.size(); ++i) m(static_cast<Eigen::Index>(i)) = mask[i] ? 1.0 : 0.0;
  return m;
}
}  // namespace

DecoderBank::DecoderBank(const std::string& path, int n_decoders, int in_dim, int hidden,
                         bool probabilistic, std::uint64_t seed)
    : in_dim_(in_dim), hidden_(hidden), probabilistic_(probabilistic) {
  if (n_decoders < 1) throw std::invalid_argument("decoder bank: need >= 1 decoder");
  subs_.reserve(n_decoders);
  for (int k = 0; k < n_decoders; ++k) {
    const std::string sp = path + ".regime" + std::to_string(k + 1);
    Sub s;
    s.w1 = make_param(sp + ".w1", in_dim, hidden, Init::Xavier, seed);
    s.b1 = make_param(sp + ".b1", 1, hidden, Init::Zero, seed);
    s.w_mu = make_param(sp + ".w_mu", hidden, 1, Init::Xavier, seed);
    s.b_mu = make_param(sp + ".b_mu", 1, 1, Init::Zero, seed);
    if (probabilistic) {
      s.w_sig = make_param(sp + ".w_sig", hidden, 1, Init::Xavier, seed);
      s.b_sig = make_param(sp + ".b_sig", 1, 1, Init::Zero, seed);
    }
    subs_.push_back(std::move(s));
  }
  touches_.assign(n_decoders, 0);
}

void DecoderBank::register_in(ParamRegistry& reg) {
  for (auto& s : subs_) {
    reg.add(&s.w1);
    reg.add(&s.b1);
    reg.add(&s.w_mu);
    reg.add(&s.b_mu);
    if (probabilistic_) {
      reg.add(&s.w_sig);
      reg.add(&s.b_sig);
    }
  }
}

ReturnPredictionVars DecoderBank::decode(ad::Graph& g, Binder& bind, Var input, int c) {
  if (c < 1 || c > n_decoders())
    throw std::invalid_argument("decode: regime " + std::to_string(c) + " out of range 1.." +
                                std::to_string(n_decoders()));
  if (g.value(input).cols() != in_dim_)
    throw std::invalid_argument("decode: input width mismatch");
  ++touches_[c - 1];
  Sub& s = subs_[c - 1];
  Var h = ad::tanh(ad::matmul(input, bind(s.w1)) + bind(s.b1));
  Var mu = ad::matmul(h, bind(s.w_mu)) + bind(s.b_mu);
  ReturnPredictionVars out;
  out.mean = mu;
  out.regime_used = c;
  if (probabilistic_) {
    out.std = ad::softplus(ad::matmul(h, bind(s.w_sig)) + bind(s.b_sig)) + sigma_floor_;
  } else {
    out.std = g.constant(ad::Mat::Ones(g.value(mu).rows(), 1));
  }
  return out;
}

Var reconstruction_nll_graph(ad::Graph& g, const ReturnPredictionVars& pred,
                             const Eigen::VectorXd& y,
                             const std::vector<std::uint8_t>& mask) {
  const Eigen::Index n = y.size();
  if (g.value(pred.mean).rows() != n || static_cast<Eigen::Index>(mask.size()) != n)
    throw std::invalid_argument("reconstruction_nll: shape mismatch");
  const Eigen::VectorXd mv = mask_to_vector(mask);
  const double n_valid = mv.sum();
  if (n_valid <= 0.0) throw std::invalid_argument("reconstruction_nll: empty mask");

  Var yv = g.constant(y);
  Var z2 = ad::square((yv - pred.mean) / pred.std);
  Var nll = ad::log(pred.std) + kHalfLog2Pi + 0.5 * z2;  // per stock, N x 1
  Var masked = nll * g.constant(mv);
  return ad::sum(masked) * (1.0 / n_valid);
}

double reconstruction_nll(const ReturnPrediction& pred, const Eigen::VectorXd& y,
                          const std::vector<std::uint8_t>& mask) {
  const Eigen::Index n = y.size();
  if (pred.mean.size() != n || static_cast<Eigen::Index>(mask.size()) != n)
    throw std::invalid_argument("reconstruction_nll: shape mismatch");
  double total = 0.0;
  long n_valid = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    ++n_valid;
    if (!(pred.std(i) > 0.0)) throw std::invalid_argument("reconstruction_nll: std must be > 0");
    const double z = (y(i) - pred.mean(i)) / pred.std(i);
    total += std::log(pred.std(i)) + kHalfLog2Pi + 0.5 * z * z;
  }
  if (n_valid == 0) throw std::invalid_argument("reconstruction_nll: empty mask");
  return total / static_cast<double>(n_valid);
}

Var mse_loss_graph(ad::Graph& g, Var mean, const Eigen::VectorXd& y,
                   const std::vector<std::uint8_t>& mask) {
  const Eigen::Index n = y.size();
  if (g.value(mean).rows() != n || static_cast<Eigen::Index>(mask.size()) != n)
    throw std::invalid_argument("mse_loss: shape mismatch");
  const Eigen::VectorXd mv = mask_to_vector(mask);
  const double n_valid = mv.sum();
  if (n_valid <= 0.0) throw std::invalid_argument("mse_loss: empty mask");
  Var err = ad::square(g.constant(y) - mean) * g.constant(mv);
  return ad::sum(err) * (1.0 / n_valid);
}

}  // namespace hirevae
