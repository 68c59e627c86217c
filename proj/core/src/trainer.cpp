#include "hirevae/trainer.hpp"

#include "hirevae/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace hirevae {

using ad::Var;

void TrainConfig::validate() const {
  if (learning_rate <= 0.0) throw std::invalid_argument("train: learning rate must be > 0");
  if (epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("train: batch size must be >= 1");
  if (n_regimes < 1) throw std::invalid_argument("train: n_regimes must be >= 1");
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("train: beta must lie in (0,1)");
  if (lambda_rec < 0.0 || lambda_hier < 0.0 || lambda_reg < 0.0 || lambda_score < 0.0)
    throw std::invalid_argument("train: loss weights must be >= 0");
  variant_from_tag(variant);  // throws on unknown tag
}

ModelConfig resolve_model_config(const TrainConfig& cfg, int n_features, int seq_len,
                                 const std::vector<int>& modality_dims) {
  cfg.validate();
  ModelConfig m;
  m.n_features = n_features;
  m.seq_len = seq_len;
  m.modality_dims = modality_dims;
  m.stock_hidden = cfg.stock_hidden;
  m.market_mod_hidden = cfg.market_mod_hidden;
  m.pair_dim = cfg.pair_dim;
  m.market_fused = cfg.market_fused;
  m.market_latent = cfg.market_latent;
  m.stock_latent = cfg.stock_latent;
  m.head_trunk = cfg.head_trunk;
  m.decoder_hidden = cfg.decoder_hidden;
  m.n_regimes = cfg.n_regimes;
  m.beta = cfg.beta;
  m.score_fit = cfg.score_fit;
  m.regime_on_fused = cfg.regime_on_fused;
  m.variant = variant_from_tag(cfg.variant);
  return m;
}

ModelConfig resolve_model_config(const TrainConfig& cfg, const Dataset& data) {
  std::vector<int> dims;
  if (data.n_dates() > 0)
    for (const auto& mb : data.market_panel(0).modalities)
      dims.push_back(static_cast<int>(mb.cols()));
  return resolve_model_config(cfg, data.config.n_features, data.config.seq_len, dims);
}

Trainer::Trainer(const TrainConfig& cfg, const ModelConfig& mcfg)
    : cfg_(cfg),
      model_(mcfg, cfg.seed),
      adam_(AdamConfig{cfg.learning_rate, 0.9, 0.999, 1e-8}),
      noise_rng_(derive_seed(cfg.seed, "train-noise")) {
  cfg_.validate();
  regime_state_.beta = cfg.beta;
  vol_state_.n_regimes = cfg.n_regimes;
}

void Trainer::begin_epoch() {
  last_consumed_ = -1;
  if (cfg_.reset_state_each_epoch) {
    regime_state_ = RegimeState{};
    regime_state_.beta = cfg_.beta;
    vol_state_ = VolRegimeState{};
    vol_state_.n_regimes = cfg_.n_regimes;
  }
}

BatchNoise Trainer::draw_noise(int n_stocks, int n_dates) {
  const auto& var = model_.config().variant;
  BatchNoise noise;
  for (int i = 0; i < n_dates; ++i) {
    if (var.use_hierarchy && var.probabilistic) {
      Eigen::MatrixXd nm(1, model_.config().market_latent);
      for (Eigen::Index j = 0; j < nm.cols(); ++j) nm(0, j) = noise_rng_.gaussian();
      noise.market.push_back(std::move(nm));
    }
    if (var.has_latent && var.probabilistic) {
      Eigen::MatrixXd nz(n_stocks, model_.config().stock_latent);
      for (Eigen::Index r = 0; r < nz.rows(); ++r)
        for (Eigen::Index c = 0; c < nz.cols(); ++c) nz(r, c) = noise_rng_.gaussian();
      noise.stock.push_back(std::move(nz));
    }
  }
  return noise;
}

Var Trainer::build_batch_loss(ad::Graph& g, Binder& bind, DataSource& data,
                              const std::vector<int>& dates, const BatchNoise& noise,
                              RegimeDecision& decision, StepLosses* breakdown) {
  const auto& var = model_.config().variant;
  const int B = static_cast<int>(dates.size());
  if (B == 0) throw std::invalid_argument("train: empty batch");

  struct DateBits {
    StockPanel sp;
    MarketPanel mp;
    Var e_s, v, m, z;
    GaussianVars m_post, m_prior, z_post, z_prior;
    Var score, mu_pred, sig_pred;
  };
  std::vector<DateBits> bits(B);

  for (int i = 0; i < B; ++i) {
    const int t = dates[i];
    data.on_advance(t);
    DateBits& b = bits[i];
    b.sp = data.stock_panel(t);
    b.mp = data.market_panel(t);
    b.e_s = model_.stock_repr(g, bind, b.sp);
    if (model_.needs_market()) b.v = model_.market_repr(g, bind, b.mp);

    if (var.use_hierarchy) {
      Var post_in = with_scalar_col(g, b.v, b.mp.mean_forward_return);
      b.m_post = model_.market_post->forward(g, bind, post_in);
      b.m_prior = model_.market_prior->forward(g, bind, b.v);
      b.m = var.probabilistic ? reparam_sample(b.m_post, g.constant(noise.market[i]))
                              : b.m_post.mean;
    }

    if (var.has_latent) {
      const int n = static_cast<int>(b.sp.forward_returns.size());
      Var y_col = g.constant(Eigen::MatrixXd(b.sp.forward_returns));
      Var post_in = var.use_hierarchy
                        ? ad::concat_cols({ad::repeat_row(b.m, n), b.e_s, y_col})
                        : ad::concat_cols({b.e_s, y_col});
      b.z_post = model_.stock_post->forward(g, bind, post_in);
      Var prior_in = var.use_hierarchy ? ad::concat_cols({ad::repeat_row(b.m, n), b.e_s})
                                       : b.e_s;
      b.z_prior = model_.stock_prior->forward(g, bind, prior_in);
      b.z = var.probabilistic ? reparam_sample(b.z_post, g.constant(noise.stock[i]))
                              : b.z_post.mean;
    }

    if (model_.learned_regimes()) {
      Var reg_in = (var.use_market_latent && !model_.config().regime_on_fused) ? b.m : b.v;
      b.score = model_.regime_heads->project(g, bind, reg_in);
      auto [mu, sig] = model_.regime_heads->predict_params(g, bind, reg_in);
      b.mu_pred = mu;
      b.sig_pred = sig;
    }
  }

  // --- regime resolution -------------------------------------------------------
  std::vector<int> assigned(B, 1);
  Var l_reg = g.scalar(0.0);
  Var l_score = g.scalar(0.0);
  bool have_score_fit = false;

  if (model_.learned_regimes()) {
    std::vector<Var> mu_rows, sig_rows;
    for (auto& b : bits) {
      mu_rows.push_back(b.mu_pred);
      sig_rows.push_back(b.sig_pred);
    }
    StabilizedVars stab =
        stabilize_graph(g, ad::concat_rows(mu_rows), ad::concat_rows(sig_rows));
    l_reg = separation_loss_graph(g, stab.mu_star, stab.sigma_star);

    if (decision.mode == RegimeDecision::Mode::Live) {
      ema_update(regime_state_, g.value(stab.mu_star).row(0).transpose(),
                 g.value(stab.sigma_star).row(0).transpose());
      ++clustering_updates_;
      decision.assigned.resize(B);
      decision.center_mu.resize(B);
      decision.center_sigma.resize(B);
      for (int i = 0; i < B; ++i) {
        const auto a = classify_score(g.scalar_value(bits[i].score), regime_state_);
        decision.assigned[i] = a.regime;
        decision.center_mu[i] = regime_state_.mu_r(a.regime - 1);
        decision.center_sigma[i] = regime_state_.sigma_r(a.regime - 1);
      }
    } else if (static_cast<int>(decision.assigned.size()) != B) {
      throw std::invalid_argument("train: fixed regime decision has wrong length");
    }
    assigned = decision.assigned;

    if (cfg_.score_fit) {
      have_score_fit = true;
      Var acc = g.scalar(0.0);
      for (int i = 0; i < B; ++i)
        acc = acc + score_fit_loss_graph(g, bits[i].score, decision.center_mu[i],
                                         decision.center_sigma[i]);
      l_score = acc * (1.0 / B);
    }
  } else if (var.use_regimes && var.regime_source == RegimeSource::VolatilityRule) {
    if (decision.mode == RegimeDecision::Mode::Live) {
      decision.assigned.resize(B);
      for (int i = 0; i < B; ++i)
        decision.assigned[i] = vol_regime(bits[i].mp.realized_vol, vol_state_);
    } else if (static_cast<int>(decision.assigned.size()) != B) {
      throw std::invalid_argument("train: fixed regime decision has wrong length");
    }
    assigned = decision.assigned;
  } else if (decision.mode == RegimeDecision::Mode::Live) {
    decision.assigned.assign(B, 1);
  }

  // --- reconstruction + hierarchy terms ---------------------------------------
  Var l_rec = g.scalar(0.0);
  Var l_hier = g.scalar(0.0);
  for (int i = 0; i < B; ++i) {
    DateBits& b = bits[i];
    const Eigen::VectorXd& y = b.sp.forward_returns;
    if (!var.has_latent) {
      Var mean = model_.baseline_mean(g, bind, b.e_s);
      l_rec = l_rec + mse_loss_graph(g, mean, y, b.sp.valid_mask);
      continue;
    }
    Var din = model_.decoder_input(g, bind, b.z, b.m, b.e_s);
    ReturnPredictionVars pred = model_.decoders->decode(g, bind, din, assigned[i]);
    l_rec = l_rec + (var.probabilistic
                         ? reconstruction_nll_graph(g, pred, y, b.sp.valid_mask)
                         : mse_loss_graph(g, pred.mean, y, b.sp.valid_mask));

    Var kl_date = g.scalar(0.0);
    if (var.use_hierarchy) kl_date = kl_date + ad::sum(kl_diag(b.m_post, b.m_prior));
    const double n = static_cast<double>(y.size());
    kl_date = kl_date + ad::sum(kl_diag(b.z_post, b.z_prior)) * (1.0 / n);
    l_hier = l_hier + kl_date;
  }
  l_rec = l_rec * (1.0 / B);
  l_hier = l_hier * (1.0 / B);

  Var total = cfg_.lambda_rec * l_rec + cfg_.lambda_hier * l_hier + cfg_.lambda_reg * l_reg;
  if (have_score_fit) total = total + cfg_.lambda_score * l_score;

  if (breakdown) {
    breakdown->rec = g.scalar_value(l_rec);
    breakdown->hier = g.scalar_value(l_hier);
    breakdown->reg = g.scalar_value(l_reg);
    breakdown->score = have_score_fit ? g.scalar_value(l_score) : 0.0;
    breakdown->total = g.scalar_value(total);
  }
  return total;
}

StepLosses Trainer::train_step(DataSource& data, const std::vector<int>& dates) {
  if (dates.empty()) throw std::invalid_argument("train: empty batch");
  for (std::size_t i = 1; i < dates.size(); ++i)
    if (dates[i] <= dates[i - 1])
      throw std::invalid_argument("train: batch dates must be strictly increasing");
  if (dates.front() <= last_consumed_)
    throw std::invalid_argument("train: batch revisits an already consumed date");

  BatchNoise noise = draw_noise(data.n_stocks(), static_cast<int>(dates.size()));
  ad::Graph g(true);
  Binder bind(g);
  RegimeDecision decision;
  StepLosses losses;
  Var total = build_batch_loss(g, bind, data, dates, noise, decision, &losses);

  if (!std::isfinite(losses.total)) {
    std::ostringstream dump;
    dump << "train: non-finite loss at batch starting date " << dates.front()
         << " (rec=" << losses.rec << " hier=" << losses.hier << " reg=" << losses.reg
         << " score=" << losses.score << ")";
    throw std::runtime_error(dump.str());
  }

  g.backward(total);
  adam_.step(g, bind);
  last_consumed_ = dates.back();
  loss_history_.push_back(losses.total);
  return losses;
}

// --- prediction (prior path) ----------------------------------------------------

namespace {

PredictOutput predict_one(Model& model, const StockPanel& sp, const MarketPanel& mp,
                          RegimeState& state, VolRegimeState& vol, bool freeze) {
  const auto& var = model.config().variant;
  ad::Graph g(false);
  Binder bind(g);
  PredictOutput out;

  Var repr = model.stock_repr(g, bind, sp);

  if (!var.has_latent) {
    Var mean = model.baseline_mean(g, bind, repr);
    out.prediction.mean = g.value(mean).col(0);
    out.prediction.std = Eigen::VectorXd::Ones(out.prediction.mean.size());
    out.prediction.regime_used = 1;
    return out;
  }

  Var v;
  if (model.needs_market()) v = model.market_repr(g, bind, mp);

  Var m0;
  if (var.use_hierarchy) m0 = model.market_prior->forward(g, bind, v).mean;

  const int n = static_cast<int>(g.value(repr).rows());
  Var prior_in = var.use_hierarchy ? ad::concat_cols({ad::repeat_row(m0, n), repr}) : repr;
  Var z0 = model.stock_prior->forward(g, bind, prior_in).mean;

  int c = 1;
  if (model.learned_regimes()) {
    Var reg_in =
        (var.use_market_latent && !model.config().regime_on_fused) ? m0 : v;
    auto [mu, sig] = model.regime_heads->predict_params(g, bind, reg_in);
    if (!freeze) {
      auto [mu_star, sig_star] = stabilize(g.value(mu), g.value(sig));
      ema_update(state, mu_star, sig_star);
    } else if (!state.initialized) {
      throw std::logic_error("predict: frozen regimes require a trained regime state");
    }
    const double s = g.scalar_value(model.regime_heads->project(g, bind, reg_in));
    out.regime_diag = classify_score(s, state);
    out.has_regime_diag = true;
    c = out.regime_diag.regime;
  } else if (var.use_regimes && var.regime_source == RegimeSource::VolatilityRule) {
    if (freeze) {
      VolRegimeState pinned = vol;
      c = vol_regime(mp.realized_vol, pinned);
    } else {
      c = vol_regime(mp.realized_vol, vol);
    }
  }

  Var din = model.decoder_input(g, bind, z0, m0, repr);
  ReturnPredictionVars pred = model.decoders->decode(g, bind, din, c);
  out.prediction.mean = g.value(pred.mean).col(0);
  out.prediction.std = g.value(pred.std).col(0);
  out.prediction.regime_used = c;
  return out;
}

}  // namespace

double Trainer::validation_rank_ic(DataSource& data, const std::vector<int>& val_dates) {
  RegimeState st = regime_state_;
  VolRegimeState vs = vol_state_;
  double sum = 0.0;
  long n = 0;
  for (int t : val_dates) {
    data.on_advance(t);
    const StockPanel sp = data.stock_panel(t);
    const MarketPanel mp = data.market_panel(t);
    const PredictOutput out = predict_one(model_, sp, mp, st, vs, false);
    const auto ric = daily_rank_ic(out.prediction.mean, sp.forward_returns, sp.valid_mask);
    if (ric.has_value()) {
      sum += *ric;
      ++n;
    }
  }
  return n > 0 ? sum / static_cast<double>(n) : -std::numeric_limits<double>::infinity();
}

Checkpoint Trainer::make_checkpoint() const {
  Checkpoint ckpt;
  ckpt.train_config = cfg_;
  ckpt.model_config = model_.config();
  for (const Parameter* p : model_.registry().all()) ckpt.params.emplace_back(p->path, p->value);
  ckpt.regime_state = regime_state_;
  ckpt.vol_state = vol_state_;
  ckpt.loss_history = loss_history_;
  ckpt.val_rank_ic_history = val_history_;
  return ckpt;
}

Checkpoint Trainer::fit(DataSource& data, const SplitGroup& split) {
  if (split.train_dates.empty() || split.val_dates.empty())
    throw std::invalid_argument("fit: split has empty train or validation block");

  struct Snapshot {
    std::vector<Eigen::MatrixXd> values;
    RegimeState rs;
    VolRegimeState vs;
  };
  auto take = [&]() {
    Snapshot s;
    for (const Parameter* p : model_.registry().all()) s.values.push_back(p->value);
    s.rs = regime_state_;
    s.vs = vol_state_;
    return s;
  };

  double best_metric = -std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  Snapshot best;

  for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
    begin_epoch();
    const auto& td = split.train_dates;
    for (std::size_t at = 0; at < td.size(); at += static_cast<std::size_t>(cfg_.batch_size)) {
      const auto end = std::min(at + static_cast<std::size_t>(cfg_.batch_size), td.size());
      std::vector<int> batch(td.begin() + static_cast<long>(at),
                             td.begin() + static_cast<long>(end));
      train_step(data, batch);
    }
    const double val = validation_rank_ic(data, split.val_dates);
    val_history_.push_back(val);
    if (val > best_metric) {
      best_metric = val;
      best_epoch = epoch;
      best = take();
    }
  }

  if (best_epoch < 0) {  // every epoch produced undefined metrics; keep the last
    best_epoch = cfg_.epochs - 1;
    best = take();
  }

  // restore the selected epoch
  {
    std::size_t k = 0;
    for (Parameter* p : model_.registry().all()) p->value = best.values[k++];
    regime_state_ = best.rs;
    vol_state_ = best.vs;
  }

  Checkpoint ckpt = make_checkpoint();
  ckpt.trained = true;
  ckpt.best_epoch = best_epoch;
  return ckpt;
}

// --- StreamingPredictor ----------------------------------------------------------

StreamingPredictor::StreamingPredictor(const Checkpoint& ckpt)
    : StreamingPredictor(ckpt, ckpt.train_config.freeze_regimes) {}

StreamingPredictor::StreamingPredictor(const Checkpoint& ckpt, bool freeze_regimes)
    : model_(ckpt.build_model()),
      state_(ckpt.regime_state),
      vol_(ckpt.vol_state),
      freeze_(freeze_regimes) {
  if (!ckpt.trained) throw std::invalid_argument("predict: checkpoint is not trained");
}

PredictOutput StreamingPredictor::predict_date(const StockPanel& sp, const MarketPanel& mp) {
  return predict_one(*model_, sp, mp, state_, vol_, freeze_);
}

std::vector<PredictOutput> StreamingPredictor::predict_range(DataSource& data,
                                                             const std::vector<int>& dates) {
  std::vector<PredictOutput> out;
  out.reserve(dates.size());
  int prev = -1;
  for (int t : dates) {
    if (t <= prev) throw std::invalid_argument("predict: dates must be strictly increasing");
    prev = t;
    data.on_advance(t);
    const StockPanel sp = data.stock_panel(t);
    const MarketPanel mp = data.market_panel(t);
    out.push_back(predict_date(sp, mp));
  }
  return out;
}

}  // namespace hirevae
