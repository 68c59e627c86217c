#include "hirevae/regime_engine.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace hirevae {

using ad::Var;

namespace {

constexpr double kHalfLog2Pi = 0.9189385332046727;  // ln(2*pi)/2

std::vector<int> descending_order(const Eigen::VectorXd& v) {
  std::vector<int> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return v(a) > v(b); });
  return idx;
}

bool non_increasing(const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i + 1 < v.size(); ++i)
    if (v(i) < v(i + 1)) return false;
  return true;
}

}  // namespace

double gaussian_logpdf(double x, double mu, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_logpdf: sigma must be positive");
  const double z = (x - mu) / sigma;
  return -std::log(sigma) - kHalfLog2Pi - 0.5 * z * z;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> stabilize(const Eigen::MatrixXd& mu_batch,
                                                      const Eigen::MatrixXd& sigma_batch) {
  if (mu_batch.rows() < 1 || mu_batch.rows() != sigma_batch.rows() ||
      mu_batch.cols() != sigma_batch.cols())
    throw std::invalid_argument("stabilize: batch shapes disagree");
  Eigen::VectorXd mu = mu_batch.colwise().mean();
  Eigen::VectorXd sigma = sigma_batch.colwise().mean();
  const auto order = descending_order(mu);
  Eigen::VectorXd mu_s(mu.size()), sigma_s(sigma.size());
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    mu_s(i) = mu(order[i]);
    sigma_s(i) = sigma(order[i]);
  }
  return {mu_s, sigma_s};
}

void ema_update(RegimeState& state, const Eigen::VectorXd& mu_star,
                const Eigen::VectorXd& sigma_star) {
  if (!(state.beta > 0.0 && state.beta < 1.0))
    throw std::invalid_argument("ema_update: beta must lie in (0, 1)");
  if (mu_star.size() != sigma_star.size())
    throw std::invalid_argument("ema_update: center/deviation size mismatch");
  if (!state.initialized) {
    state.mu_r = mu_star;
    state.sigma_r = sigma_star;
    state.initialized = true;
  } else {
    if (state.mu_r.size() != mu_star.size())
      throw std::invalid_argument("ema_update: regime count changed");
    state.mu_r = state.beta * state.mu_r + (1.0 - state.beta) * mu_star;
    state.sigma_r = state.beta * state.sigma_r + (1.0 - state.beta) * sigma_star;
  }
  // the blend of two sorted vectors is usually sorted; restore the invariant
  // if deviation histories broke it
  if (!non_increasing(state.mu_r)) {
    const auto order = descending_order(state.mu_r);
    Eigen::VectorXd mu(state.mu_r.size()), sigma(state.sigma_r.size());
    for (Eigen::Index i = 0; i < mu.size(); ++i) {
      mu(i) = state.mu_r(order[i]);
      sigma(i) = state.sigma_r(order[i]);
    }
    state.mu_r = mu;
    state.sigma_r = sigma;
  }
}

Eigen::VectorXd regime_loglik(double score, const RegimeState& state) {
  if (!state.initialized) throw std::logic_error("regime_loglik: state not initialized");
  Eigen::VectorXd out(state.n_regimes());
  for (int i = 0; i < state.n_regimes(); ++i)
    out(i) = gaussian_logpdf(score, state.mu_r(i), state.sigma_r(i));
  return out;
}

int assign_regime(const Eigen::VectorXd& log_liks) {
  if (log_liks.size() == 0) throw std::invalid_argument("assign_regime: empty log-likelihoods");
  int best = 0;
  for (Eigen::Index i = 1; i < log_liks.size(); ++i)
    if (log_liks(i) > log_liks(best)) best = static_cast<int>(i);
  return best + 1;
}

RegimeAssignment classify_score(double score, const RegimeState& state) {
  RegimeAssignment a;
  a.score = score;
  a.log_liks = regime_loglik(score, state);
  a.regime = assign_regime(a.log_liks);
  return a;
}

double separation_loss(const Eigen::VectorXd& mu, const Eigen::VectorXd& sigma) {
  if (mu.size() != sigma.size()) throw std::invalid_argument("separation_loss: size mismatch");
  double total = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i)
    for (Eigen::Index j = i + 1; j < mu.size(); ++j)
      total += gaussian_kl_1d(mu(i), sigma(i), mu(j), sigma(j));
  return -total;
}

double score_fit_loss(double score, const RegimeState& state, int regime) {
  if (!state.initialized) throw std::logic_error("score_fit_loss: state not initialized");
  if (regime < 1 || regime > state.n_regimes())
    throw std::invalid_argument("score_fit_loss: regime index out of range");
  return -gaussian_logpdf(score, state.mu_r(regime - 1), state.sigma_r(regime - 1));
}

int vol_regime(double sigma_t, VolRegimeState& state) {
  if (state.n_regimes < 2) throw std::invalid_argument("vol_regime: needs K >= 2");
  state.sigma_min = std::min(state.sigma_min, sigma_t);
  state.sigma_max = std::max(state.sigma_max, sigma_t);
  const double range = state.sigma_max - state.sigma_min;
  if (!(range > 0.0)) return 1;  // first observation / flat history
  const double level = (sigma_t - state.sigma_min) / range;
  const int k = 1 + static_cast<int>(level * state.n_regimes);
  return std::min(k, state.n_regimes);  // level == 1 closes the top band
}

// --- learned heads --------------------------------------------------------------

RegimeHeads::RegimeHeads(const std::string& path, int in_dim, int n_regimes,
                         std::uint64_t seed)
    : w_proj(make_param(path + ".w_proj", in_dim, 1, Init::Xavier, seed)),
      b_proj(make_param(path + ".b_proj", 1, 1, Init::Zero, seed)),
      w_mu(make_param(path + ".w_mu", in_dim, n_regimes, Init::Xavier, seed)),
      b_mu(make_param(path + ".b_mu", 1, n_regimes, Init::Zero, seed)),
      w_sig(make_param(path + ".w_sig", in_dim, n_regimes, Init::Xavier, seed)),
      b_sig(make_param(path + ".b_sig", 1, n_regimes, Init::Zero, seed)),
      in_dim_(in_dim),
      n_regimes_(n_regimes) {
  // spread the initial center biases so early assignments are not degenerate:
  // bias k starts at the descending ladder 1, ..., -1
  for (int k = 0; k < n_regimes; ++k) {
    const double f = n_regimes == 1 ? 0.0
                                    : 1.0 - 2.0 * static_cast<double>(k) /
                                                static_cast<double>(n_regimes - 1);
    b_mu.value(0, k) = snap_f32(f);
  }
}

void RegimeHeads::register_in(ParamRegistry& reg) {
  reg.add(&w_proj);
  reg.add(&b_proj);
  reg.add(&w_mu);
  reg.add(&b_mu);
  reg.add(&w_sig);
  reg.add(&b_sig);
}

Var RegimeHeads::project(ad::Graph& g, Binder& bind, Var input) {
  if (g.value(input).cols() != in_dim_)
    throw std::invalid_argument("regime project: input width mismatch");
  return ad::matmul(input, bind(w_proj)) + bind(b_proj);
}

std::pair<Var, Var> RegimeHeads::predict_params(ad::Graph& g, Binder& bind, Var input) {
  if (g.value(input).cols() != in_dim_)
    throw std::invalid_argument("regime params: input width mismatch");
  Var mu = ad::matmul(input, bind(w_mu)) + bind(b_mu);
  Var sig = ad::softplus(ad::matmul(input, bind(w_sig)) + bind(b_sig)) + sigma_floor;
  return {mu, sig};
}

StabilizedVars stabilize_graph(ad::Graph& g, Var mu_rows, Var sigma_rows) {
  Var mu_mean = ad::colwise_mean(mu_rows);
  Var sigma_mean = ad::colwise_mean(sigma_rows);
  Eigen::VectorXd mu = g.value(mu_mean).row(0);
  const auto order = descending_order(mu);
  StabilizedVars out;
  out.perm = order;
  out.mu_star = ad::permute_cols(mu_mean, order);
  out.sigma_star = ad::permute_cols(sigma_mean, order);
  return out;
}

Var separation_loss_graph(ad::Graph& g, Var mu_star, Var sigma_star) {
  const int n = static_cast<int>(g.value(mu_star).cols());
  Var total = g.scalar(0.0);
  for (int i = 0; i < n; ++i) {
    Var mu_i = ad::cell(mu_star, 0, i);
    Var sig_i = ad::cell(sigma_star, 0, i);
    for (int j = i + 1; j < n; ++j) {
      Var mu_j = ad::cell(mu_star, 0, j);
      Var sig_j = ad::cell(sigma_star, 0, j);
      Var kl = ad::log(sig_j) - ad::log(sig_i) +
               (ad::square(sig_i) + ad::square(mu_i - mu_j)) / (2.0 * ad::square(sig_j)) - 0.5;
      total = total + kl;
    }
  }
  return -total;
}

Var score_fit_loss_graph(ad::Graph& g, Var score, double mu_c, double sigma_c) {
  if (!(sigma_c > 0.0)) throw std::invalid_argument("score_fit_loss: sigma must be positive");
  Var z2 = ad::square(score - mu_c) * (1.0 / (sigma_c * sigma_c));
  return 0.5 * z2 + (std::log(sigma_c) + kHalfLog2Pi);
}

}  // namespace hirevae
