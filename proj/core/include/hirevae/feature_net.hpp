#pragma once

#include "hirevae/autodiff.hpp"
#include "hirevae/params.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hirevae {

// Gated recurrent unit, single-bias convention:
//   r = sigmoid(x W_xr + h W_hr + b_r)
//   z = sigmoid(x W_xz + h W_hz + b_z)
//   n = tanh(x W_xn + r .* (h W_hn) + b_n)
//   h' = (1 - z) .* n + z .* h
struct GruParams {
  int input_dim = 0;
  int hidden_dim = 0;
  Parameter w_x;             // input_dim x 3H, gate blocks [r | z | n]
  Parameter w_h;             // H x 3H
  Parameter b_r, b_z, b_n;   // 1 x H

  GruParams() = default;
  GruParams(const std::string& path, int input_dim, int hidden_dim, std::uint64_t seed);
  void register_in(ParamRegistry& reg);
};

ad::Var gru_step(ad::Graph& g, Binder& bind, GruParams& p, ad::Var x, ad::Var h);

// Final hidden state over the whole sequence, zero initial state.
// steps[t] is [B x input_dim]; result is [B x H].
ad::Var gru_last_state(ad::Graph& g, Binder& bind, GruParams& p,
                       const std::vector<ad::Var>& steps);

// All hidden states stacked as [T x H]; requires B == 1 steps.
ad::Var gru_states(ad::Graph& g, Binder& bind, GruParams& p,
                   const std::vector<ad::Var>& steps);

// Single-head attention of one query vector against a token matrix.
struct CrossAttentionParams {
  int query_dim = 0, token_dim = 0, attn_dim = 0, out_dim = 0;
  Parameter w_q;  // query_dim x attn_dim
  Parameter w_k;  // token_dim x attn_dim
  Parameter w_v;  // token_dim x attn_dim
  Parameter w_o;  // attn_dim x out_dim
  Parameter b_o;  // 1 x out_dim

  CrossAttentionParams() = default;
  CrossAttentionParams(const std::string& path, int query_dim, int token_dim, int attn_dim,
                       int out_dim, std::uint64_t seed);
  void register_in(ParamRegistry& reg);
};

// query [1 x query_dim], tokens [Tb x token_dim] -> [1 x out_dim]
ad::Var cross_attend(ad::Graph& g, Binder& bind, CrossAttentionParams& p, ad::Var query,
                     ad::Var tokens);
// Attention weights only (softmax over tokens), for inspection/tests.
ad::Var cross_attend_weights(ad::Graph& g, Binder& bind, CrossAttentionParams& p, ad::Var query,
                             ad::Var tokens);

// Per-stock sequence summary e_s: the GRU's last hidden state.
class StockFeatureNet {
 public:
  StockFeatureNet() = default;
  StockFeatureNet(int n_features, int hidden, std::uint64_t seed);
  void register_in(ParamRegistry& reg);

  // x_steps: T entries of [N x C] -> e_s [N x H]. Throws on non-finite input.
  ad::Var extract(ad::Graph& g, Binder& bind, const std::vector<ad::Mat>& x_steps);
  ad::Var extract(ad::Graph& g, Binder& bind, const std::vector<ad::Var>& x_steps);

  int hidden() const { return gru.hidden_dim; }

  GruParams gru;
};

// Fused market summary v: per-modality GRUs, cross attention over every
// unordered modality pair (query = first modality's summary, tokens = second
// modality's per-step states), concatenation, affine map to the fused size.
class MarketFeatureNet {
 public:
  MarketFeatureNet() = default;
  MarketFeatureNet(const std::vector<int>& modality_dims, int mod_hidden, int pair_dim,
                   int fused_dim, std::uint64_t seed);
  void register_in(ParamRegistry& reg);

  // modalities: d entries of [T x C_i] -> v [1 x H_c]
  ad::Var extract(ad::Graph& g, Binder& bind, const std::vector<ad::Mat>& modalities);
  ad::Var extract(ad::Graph& g, Binder& bind, const std::vector<ad::Var>& modalities);

  static int pair_count(int d) { return d * (d - 1) / 2; }
  int fused_dim() const { return fused_dim_; }
  int n_modalities() const { return static_cast<int>(encoders.size()); }

  std::vector<GruParams> encoders;
  std::vector<CrossAttentionParams> pairs;  // (0,1),(0,2),...,(d-2,d-1)
  Parameter w_fuse;                         // (pairs * pair_dim) x H_c
  Parameter b_fuse;                         // 1 x H_c

 private:
  int fused_dim_ = 0;
};

}  // namespace hirevae
