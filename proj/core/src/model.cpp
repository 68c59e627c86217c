#include "hirevae/model.hpp"

#include <stdexcept>

namespace hirevae {

using ad::Var;

VariantSpec variant_from_tag(const std::string& tag) {
  VariantSpec v;
  v.tag = tag;
  if (tag == "linear" || tag == "gru" || tag == "mlp") {
    v.arch = tag;
  } else if (tag == "vae") {
    v.has_latent = true;
    v.probabilistic = true;
  } else if (tag == "cvae") {
    v.has_latent = true;
  } else if (tag == "rvae" || tag == "rcvae") {
    v.has_latent = true;
    v.probabilistic = (tag == "rvae");
    v.use_regimes = true;
    v.regime_source = RegimeSource::Learned;
    v.use_market_latent = false;  // switching reads the fused market features
  } else if (tag == "hivae") {
    v.has_latent = true;
    v.probabilistic = true;
    v.use_hierarchy = true;
    v.use_market_latent = true;
  } else if (tag == "hirevae") {
    v.has_latent = true;
    v.probabilistic = true;
    v.use_hierarchy = true;
    v.use_market_latent = true;
    v.use_regimes = true;
    v.regime_source = RegimeSource::Learned;
  } else if (tag == "hirevae-v") {
    v.has_latent = true;
    v.probabilistic = true;
    v.use_hierarchy = true;
    v.use_market_latent = true;
    v.use_regimes = true;
    v.regime_source = RegimeSource::VolatilityRule;
  } else {
    throw std::invalid_argument("unknown variant tag: " + tag);
  }
  return v;
}

bool Model::needs_market() const {
  const auto& var = cfg_.variant;
  if (var.use_hierarchy) return true;
  // learned switching without a market latent reads the fused features
  return var.use_regimes && var.regime_source == RegimeSource::Learned;
}

int Model::regime_count() const {
  return cfg_.variant.use_regimes ? cfg_.n_regimes : 1;
}

int Model::decoder_in_dim() const {
  int dim = cfg_.stock_latent + cfg_.stock_hidden;
  if (cfg_.variant.use_hierarchy) dim += cfg_.market_latent;
  return dim;
}

Model::Model(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  const auto& var = cfg_.variant;

  if (var.arch != "linear")
    stock_net.emplace(cfg_.n_features, cfg_.stock_hidden, seed);

  if (needs_market()) {
    if (cfg_.modality_dims.empty())
      throw std::invalid_argument("model: variant needs market data but no modality dims");
    market_net.emplace(cfg_.modality_dims, cfg_.market_mod_hidden, cfg_.pair_dim,
                       cfg_.market_fused, seed);
  }

  if (var.use_hierarchy) {
    market_post.emplace("latent.market_post", cfg_.market_fused + 1, cfg_.head_trunk,
                        cfg_.market_latent, seed);
    market_prior.emplace("latent.market_prior", cfg_.market_fused, cfg_.head_trunk,
                         cfg_.market_latent, seed);
  }

  if (var.has_latent) {
    const int m_dim = var.use_hierarchy ? cfg_.market_latent : 0;
    stock_post.emplace("latent.stock_post", m_dim + cfg_.stock_hidden + 1, cfg_.head_trunk,
                       cfg_.stock_latent, seed);
    stock_prior.emplace("latent.stock_prior", m_dim + cfg_.stock_hidden, cfg_.head_trunk,
                        cfg_.stock_latent, seed);
    decoders.emplace("decoder", regime_count(), decoder_in_dim(), cfg_.decoder_hidden,
                     var.probabilistic, seed);
  }

  // the learned clustering path exists only with more than one regime
  if (var.use_regimes && var.regime_source == RegimeSource::Learned && cfg_.n_regimes > 1) {
    const int in_dim = (var.use_market_latent && !cfg_.regime_on_fused) ? cfg_.market_latent
                                                                        : cfg_.market_fused;
    regime_heads.emplace("regime", in_dim, cfg_.n_regimes, seed);
  }

  if (!var.has_latent) {
    if (var.arch == "linear") {
      base_w1 = make_param("baseline.w", cfg_.n_features, 1, Init::Xavier, seed);
      base_b1 = make_param("baseline.b", 1, 1, Init::Zero, seed);
    } else if (var.arch == "gru") {
      base_w1 = make_param("baseline.w", cfg_.stock_hidden, 1, Init::Xavier, seed);
      base_b1 = make_param("baseline.b", 1, 1, Init::Zero, seed);
    } else if (var.arch == "mlp") {
      base_w1 = make_param("baseline.w1", cfg_.stock_hidden, cfg_.decoder_hidden, Init::Xavier, seed);
      base_b1 = make_param("baseline.b1", 1, cfg_.decoder_hidden, Init::Zero, seed);
      base_w2 = make_param("baseline.w2", cfg_.decoder_hidden, 1, Init::Xavier, seed);
      base_b2 = make_param("baseline.b2", 1, 1, Init::Zero, seed);
    } else {
      throw std::invalid_argument("model: non-latent variant with unknown arch '" + var.arch +
                                  "'");
    }
  }

  // registration order fixes checkpoint blob ordering; init itself is
  // path-seeded and order independent
  if (stock_net) stock_net->register_in(reg_);
  if (market_net) market_net->register_in(reg_);
  if (market_post) market_post->register_in(reg_);
  if (market_prior) market_prior->register_in(reg_);
  if (stock_post) stock_post->register_in(reg_);
  if (stock_prior) stock_prior->register_in(reg_);
  if (decoders) decoders->register_in(reg_);
  if (regime_heads) regime_heads->register_in(reg_);
  if (!var.has_latent) {
    reg_.add(&base_w1);
    reg_.add(&base_b1);
    if (var.arch == "mlp") {
      reg_.add(&base_w2);
      reg_.add(&base_b2);
    }
  }
}

Var Model::stock_repr(ad::Graph& g, Binder& bind, const StockPanel& panel) {
  if (cfg_.variant.arch == "linear") {
    // average pooling over the sequence axis, no recurrent parameters
    if (panel.features.empty()) throw std::invalid_argument("stock_repr: empty sequence");
    Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(panel.features.front().rows(),
                                                   panel.features.front().cols());
    for (const auto& x : panel.features) pooled += x;
    pooled /= static_cast<double>(panel.features.size());
    if (!ad::all_finite(pooled)) throw std::invalid_argument("stock_repr: non-finite input");
    return g.constant(pooled);
  }
  return stock_net->extract(g, bind, panel.features);
}

Var Model::market_repr(ad::Graph& g, Binder& bind, const MarketPanel& panel) {
  if (!market_net) throw std::logic_error("market_repr: variant has no market path");
  return market_net->extract(g, bind, panel.modalities);
}

Var Model::baseline_mean(ad::Graph& g, Binder& bind, Var repr) {
  if (cfg_.variant.has_latent) throw std::logic_error("baseline_mean: latent variant");
  if (cfg_.variant.arch == "mlp") {
    Var h = ad::tanh(ad::matmul(repr, bind(base_w1)) + bind(base_b1));
    return ad::matmul(h, bind(base_w2)) + bind(base_b2);
  }
  return ad::matmul(repr, bind(base_w1)) + bind(base_b1);
}

Var Model::decoder_input(ad::Graph& g, Binder& bind, Var z, Var m, Var e_s) {
  (void)bind;
  if (cfg_.variant.use_hierarchy) {
    const int n = static_cast<int>(g.value(e_s).rows());
    return ad::concat_cols({z, ad::repeat_row(m, n), e_s});
  }
  return ad::concat_cols({z, e_s});
}

}  // namespace hirevae
