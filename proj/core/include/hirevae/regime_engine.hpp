#pragma once

#include "hirevae/autodiff.hpp"
#include "hirevae/hier_latent.hpp"
#include "hirevae/params.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace hirevae {

// Persistent regime distributions in the 1-D score space. Centers stay sorted
// non-increasing after every update so cluster identities never swap.
struct RegimeState {
  Eigen::VectorXd mu_r;     // non-increasing
  Eigen::VectorXd sigma_r;  // > 0
  double beta = 0.99;       // EMA weight on history
  bool initialized = false;

  int n_regimes() const { return static_cast<int>(mu_r.size()); }
};

struct RegimeAssignment {
  double score = 0.0;
  Eigen::VectorXd log_liks;
  int regime = 0;  // 1-based, argmax of log_liks (ties -> lowest)
};

// Running min/max volatility normalizer with K level bands.
struct VolRegimeState {
  double sigma_min = std::numeric_limits<double>::infinity();
  double sigma_max = -std::numeric_limits<double>::infinity();
  int n_regimes = 3;
};

// --- plain state ops ----------------------------------------------------------

double gaussian_logpdf(double x, double mu, double sigma);

// Batch-mean the per-date predictions, then sort centers descending carrying
// the deviations along. Stable on ties.
std::pair<Eigen::VectorXd, Eigen::VectorXd> stabilize(const Eigen::MatrixXd& mu_batch,
                                                      const Eigen::MatrixXd& sigma_batch);

// First call adopts (mu_star, sigma_star) verbatim; later calls blend with
// weight beta on history and re-sort if the blend broke the ordering.
void ema_update(RegimeState& state, const Eigen::VectorXd& mu_star,
                const Eigen::VectorXd& sigma_star);

Eigen::VectorXd regime_loglik(double score, const RegimeState& state);
int assign_regime(const Eigen::VectorXd& log_liks);
RegimeAssignment classify_score(double score, const RegimeState& state);

// Negative sum of pairwise KLs over ordered pairs (i, j > i); minimizing it
// pushes the regime distributions apart.
double separation_loss(const Eigen::VectorXd& mu, const Eigen::VectorXd& sigma);

// Negative log-likelihood of the score under its assigned regime; centers are
// constants here (no gradient path to them).
double score_fit_loss(double score, const RegimeState& state, int regime);

// Rule baseline: normalize sigma_t against the running range, band into K
// levels. First observation (degenerate range) maps to regime 1.
int vol_regime(double sigma_t, VolRegimeState& state);

// --- learned heads + graph ops used in training --------------------------------

class RegimeHeads {
 public:
  RegimeHeads() = default;
  RegimeHeads(const std::string& path, int in_dim, int n_regimes, std::uint64_t seed);
  void register_in(ParamRegistry& reg);

  // [1 x in_dim] -> 1x1 market score
  ad::Var project(ad::Graph& g, Binder& bind, ad::Var input);
  // [1 x in_dim] -> (mu [1 x N_r], sigma [1 x N_r]); sigma via softplus + floor
  std::pair<ad::Var, ad::Var> predict_params(ad::Graph& g, Binder& bind, ad::Var input);

  int n_regimes() const { return n_regimes_; }
  int in_dim() const { return in_dim_; }

  Parameter w_proj, b_proj;
  Parameter w_mu, b_mu;
  Parameter w_sig, b_sig;
  double sigma_floor = kSigmaFloor;

 private:
  int in_dim_ = 0, n_regimes_ = 0;
};

struct StabilizedVars {
  ad::Var mu_star;     // 1 x N_r, non-increasing values
  ad::Var sigma_star;  // 1 x N_r
  std::vector<int> perm;
};

// Graph counterpart of stabilize(); the sort permutation is computed from
// values and applied as a fixed linear op.
StabilizedVars stabilize_graph(ad::Graph& g, ad::Var mu_rows, ad::Var sigma_rows);

ad::Var separation_loss_graph(ad::Graph& g, ad::Var mu_star, ad::Var sigma_star);
ad::Var score_fit_loss_graph(ad::Graph& g, ad::Var score, double mu_c, double sigma_c);

}  // namespace hirevae
