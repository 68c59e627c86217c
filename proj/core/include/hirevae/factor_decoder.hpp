#pragma once

#include "hirevae/autodiff.hpp"
#include "hirevae/hier_latent.hpp"
#include "hirevae/params.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hirevae {

// Per-stock predictive distribution emitted by one regime's decoder.
struct ReturnPrediction {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;  // all ones for mean-only banks
  int regime_used = 0;  // 1-based
};

struct ReturnPredictionVars {
  ad::Var mean;  // N x 1
  ad::Var std;   // N x 1 (constant ones when the bank is mean-only)
  int regime_used = 0;
};

// Bank of independent per-regime decoders. Each decoder is a per-stock
// feedforward head on the concatenated conditioning row; only the selected
// regime's parameters participate in a decode.
class DecoderBank {
 public:
  DecoderBank() = default;
  // probabilistic = false drops the std head (squared-error mode).
  DecoderBank(const std::string& path, int n_decoders, int in_dim, int hidden,
              bool probabilistic, std::uint64_t seed);
  void register_in(ParamRegistry& reg);

  // input [N x in_dim], c in 1..n_decoders
  ReturnPredictionVars decode(ad::Graph& g, Binder& bind, ad::Var input, int c);

  int n_decoders() const { return static_cast<int>(subs_.size()); }
  bool probabilistic() const { return probabilistic_; }
  int in_dim() const { return in_dim_; }

  // instrumentation: decode counts per regime (tests assert isolation)
  const std::vector<long>& touch_counts() const { return touches_; }
  void reset_touch_counts() { touches_.assign(touches_.size(), 0); }

 private:
  struct Sub {
    Parameter w1, b1, w_mu, b_mu, w_sig, b_sig;
  };
  std::vector<Sub> subs_;
  std::vector<long> touches_;
  int in_dim_ = 0, hidden_ = 0;
  bool probabilistic_ = true;
  double sigma_floor_ = kSigmaFloor;
};

// Mean over valid stocks of the Gaussian negative log-density of y under the
// prediction. Throws if the mask admits no stock.
ad::Var reconstruction_nll_graph(ad::Graph& g, const ReturnPredictionVars& pred,
                                 const Eigen::VectorXd& y,
                                 const std::vector<std::uint8_t>& mask);
double reconstruction_nll(const ReturnPrediction& pred, const Eigen::VectorXd& y,
                          const std::vector<std::uint8_t>& mask);

// Mean squared error over valid stocks (mean-only banks).
ad::Var mse_loss_graph(ad::Graph& g, ad::Var mean, const Eigen::VectorXd& y,
                       const std::vector<std::uint8_t>& mask);

}  // namespace hirevae
