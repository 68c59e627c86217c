#pragma once

#include "hirevae/factor_decoder.hpp"
#include "hirevae/feature_net.hpp"
#include "hirevae/hier_latent.hpp"
#include "hirevae/market_sim.hpp"
#include "hirevae/params.hpp"
#include "hirevae/regime_engine.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace hirevae {

enum class RegimeSource { None, Learned, VolatilityRule };

// Known tags: hirevae, hirevae-v, hivae, rvae, rcvae, vae, cvae, mlp, gru, linear.
struct VariantSpec {
  std::string tag;
  bool use_hierarchy = false;      // market latent above the stock latent
  bool use_regimes = false;        // decoder bank switched by regime
  RegimeSource regime_source = RegimeSource::None;
  bool use_market_latent = false;  // switching reads the market latent (else fused v)
  bool has_latent = false;         // VAE family
  bool probabilistic = false;      // Gaussian decoder; false = mean-only / squared error
  std::string arch;                // non-latent baselines: linear | gru | mlp
};

VariantSpec variant_from_tag(const std::string& tag);

struct ModelConfig {
  // data dims
  int n_features = 58;
  int seq_len = 20;
  std::vector<int> modality_dims;
  // sizes
  int stock_hidden = 64;      // H
  int market_mod_hidden = 32; // per-modality recurrent width
  int pair_dim = 64;          // cross-attention output width
  int market_fused = 64;      // H_c
  int market_latent = 16;     // H_m
  int stock_latent = 32;      // H_s
  int head_trunk = 32;        // Gaussian head trunk width
  int decoder_hidden = 64;
  int n_regimes = 3;          // N_r
  double beta = 0.99;
  bool score_fit = true;          // train the projection against assigned centers
  bool regime_on_fused = false;   // regime learner reads v instead of the latent
  VariantSpec variant;
};

// Owns every parameterized module the active variant needs; pure forward
// helpers, no training state.
class Model {
 public:
  Model(const ModelConfig& cfg, std::uint64_t seed);

  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const ModelConfig& config() const { return cfg_; }
  ParamRegistry& registry() { return reg_; }
  const ParamRegistry& registry() const { return reg_; }

  bool needs_market() const;
  bool learned_regimes() const { return regime_heads.has_value(); }
  int regime_count() const;
  int decoder_in_dim() const;

  // N x H summary (average-pooled N x C for the linear baseline)
  ad::Var stock_repr(ad::Graph& g, Binder& bind, const StockPanel& panel);
  // 1 x H_c fused market features
  ad::Var market_repr(ad::Graph& g, Binder& bind, const MarketPanel& panel);
  // baseline prediction head (non-latent variants), repr -> N x 1
  ad::Var baseline_mean(ad::Graph& g, Binder& bind, ad::Var repr);
  // conditioning row for the decoder bank: [z | m | e_s] per variant
  ad::Var decoder_input(ad::Graph& g, Binder& bind, ad::Var z, ad::Var m, ad::Var e_s);

  std::optional<StockFeatureNet> stock_net;
  std::optional<MarketFeatureNet> market_net;
  std::optional<GaussianHead> market_post, market_prior;
  std::optional<GaussianHead> stock_post, stock_prior;
  std::optional<DecoderBank> decoders;
  std::optional<RegimeHeads> regime_heads;

  // baseline heads
  Parameter base_w1, base_b1, base_w2, base_b2;

 private:
  ModelConfig cfg_;
  ParamRegistry reg_;
};

}  // namespace hirevae
