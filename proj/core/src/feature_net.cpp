#include "hirevae/feature_net.hpp"

#include <cmath>
#include <stdexcept>

namespace hirevae {

using ad::Var;

GruParams::GruParams(const std::string& path, int input, int hidden, std::uint64_t seed)
    : input_dim(input),
      hidden_dim(hidden),
      w_x(make_param(path + ".w_x", input, 3 * hidden, Init::Xavier, seed)),
      w_h(make_param(path + ".w_h", hidden, 3 * hidden, Init::Xavier, seed)),
      b_r(make_param(path + ".b_r", 1, hidden, Init::Zero, seed)),
      b_z(make_param(path + ".b_z", 1, hidden, Init::Zero, seed)),
      b_n(make_param(path + ".b_n", 1, hidden, Init::Zero, seed)) {}

void GruParams::register_in(ParamRegistry& reg) {
  reg.add(&w_x);
  reg.add(&w_h);
  reg.add(&b_r);
  reg.add(&b_z);
  reg.add(&b_n);
}

Var gru_step(ad::Graph&, Binder& bind, GruParams& p, Var x, Var h) {
  const int H = p.hidden_dim;
  Var wx = bind(p.w_x), wh = bind(p.w_h);
  Var u = ad::matmul(x, wx);   // [B x 3H]
  Var w = ad::matmul(h, wh);   // [B x 3H]
  Var r = ad::sigmoid(ad::slice_cols(u, 0, H) + ad::slice_cols(w, 0, H) + bind(p.b_r));
  Var z = ad::sigmoid(ad::slice_cols(u, H, H) + ad::slice_cols(w, H, H) + bind(p.b_z));
  Var n = ad::tanh(ad::slice_cols(u, 2 * H, H) + r * ad::slice_cols(w, 2 * H, H) + bind(p.b_n));
  return (1.0 - z) * n + z * h;
}

Var gru_last_state(ad::Graph& g, Binder& bind, GruParams& p, const std::vector<Var>& steps) {
  if (steps.empty()) throw std::invalid_argument("gru: empty sequence");
  const auto rows = g.value(steps.front()).rows();
  Var h = g.constant(ad::Mat::Zero(rows, p.hidden_dim));
  for (Var x : steps) h = gru_step(g, bind, p, x, h);
  return h;
}

Var gru_states(ad::Graph& g, Binder& bind, GruParams& p, const std::vector<Var>& steps) {
  if (steps.empty()) throw std::invalid_argument("gru: empty sequence");
  if (g.value(steps.front()).rows() != 1)
    throw std::invalid_argument("gru_states expects single-row steps");
  Var h = g.constant(ad::Mat::Zero(1, p.hidden_dim));
  std::vector<Var> states;
  states.reserve(steps.size());
  for (Var x : steps) {
    h = gru_step(g, bind, p, x, h);
    states.push_back(h);
  }
  return ad::concat_rows(states);
}

CrossAttentionParams::CrossAttentionParams(const std::string& path, int query, int token,
                                           int attn, int out, std::uint64_t seed)
    : query_dim(query),
      token_dim(token),
      attn_dim(attn),
      out_dim(out),
      w_q(make_param(path + ".w_q", query, attn, Init::Xavier, seed)),
      w_k(make_param(path + ".w_k", token, attn, Init::Xavier, seed)),
      w_v(make_param(path + ".w_v", token, attn, Init::Xavier, seed)),
      w_o(make_param(path + ".w_o", attn, out, Init::Xavier, seed)),
      b_o(make_param(path + ".b_o", 1, out, Init::Zero, seed)) {}

void CrossAttentionParams::register_in(ParamRegistry& reg) {
  reg.add(&w_q);
  reg.add(&w_k);
  reg.add(&w_v);
  reg.add(&w_o);
  reg.add(&b_o);
}

Var cross_attend_weights(ad::Graph&, Binder& bind, CrossAttentionParams& p, Var query,
                         Var tokens) {
  Var q = ad::matmul(query, bind(p.w_q));           // [1 x K]
  Var keys = ad::matmul(tokens, bind(p.w_k));       // [Tb x K]
  Var logits = ad::matmul(keys, ad::transpose(q));  // [Tb x 1]
  logits = logits * (1.0 / std::sqrt(static_cast<double>(p.attn_dim)));
  return ad::softmax_col(logits);
}

Var cross_attend(ad::Graph& g, Binder& bind, CrossAttentionParams& p, Var query, Var tokens) {
  if (!ad::all_finite(g.value(query)) || !ad::all_finite(g.value(tokens)))
    throw std::invalid_argument("cross_attend: non-finite input");
  Var weights = cross_attend_weights(g, bind, p, query, tokens);  // [Tb x 1]
  Var vals = ad::matmul(tokens, bind(p.w_v));                     // [Tb x K]
  Var ctx = ad::matmul(ad::transpose(weights), vals);             // [1 x K]
  return ad::matmul(ctx, bind(p.w_o)) + bind(p.b_o);
}

StockFeatureNet::StockFeatureNet(int n_features, int hidden, std::uint64_t seed)
    : gru("feature.stock_gru", n_features, hidden, seed) {}

void StockFeatureNet::register_in(ParamRegistry& reg) { gru.register_in(reg); }

Var StockFeatureNet::extract(ad::Graph& g, Binder& bind, const std::vector<ad::Mat>& x_steps) {
  std::vector<Var> steps;
  steps.reserve(x_steps.size());
  for (const auto& m : x_steps) {
    if (!ad::all_finite(m)) throw std::invalid_argument("stock features: non-finite input");
    steps.push_back(g.constant(m));
  }
  return extract(g, bind, steps);
}

Var StockFeatureNet::extract(ad::Graph& g, Binder& bind, const std::vector<Var>& x_steps) {
  return gru_last_state(g, bind, gru, x_steps);
}

MarketFeatureNet::MarketFeatureNet(const std::vector<int>& modality_dims, int mod_hidden,
                                   int pair_dim, int fused_dim, std::uint64_t seed)
    : fused_dim_(fused_dim) {
  const int d = static_cast<int>(modality_dims.size());
  if (d < 1) throw std::invalid_argument("market feature net needs >= 1 modality");
  encoders.reserve(d);
  for (int i = 0; i < d; ++i)
    encoders.emplace_back("feature.market_gru" + std::to_string(i), modality_dims[i],
                          mod_hidden, seed);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      pairs.emplace_back("feature.pair" + std::to_string(i) + "_" + std::to_string(j),
                         mod_hidden, mod_hidden, mod_hidden, pair_dim, seed);
  // d == 1 has no pairs; fuse the lone summary directly
  const int concat = pairs.empty() ? mod_hidden : static_cast<int>(pairs.size()) * pair_dim;
  w_fuse = make_param("feature.fuse.w", concat, fused_dim, Init::Xavier, seed);
  b_fuse = make_param("feature.fuse.b", 1, fused_dim, Init::Zero, seed);
}

void MarketFeatureNet::register_in(ParamRegistry& reg) {
  for (auto& e : encoders) e.register_in(reg);
  for (auto& a : pairs) a.register_in(reg);
  reg.add(&w_fuse);
  reg.add(&b_fuse);
}

Var MarketFeatureNet::extract(ad::Graph& g, Binder& bind, const std::vector<ad::Mat>& modalities) {
  std::vector<Var> blocks;
  blocks.reserve(modalities.size());
  for (const auto& m : modalities) {
    if (!ad::all_finite(m)) throw std::invalid_argument("market features: non-finite input");
    blocks.push_back(g.constant(m));
  }
  return extract(g, bind, blocks);
}

Var MarketFeatureNet::extract(ad::Graph& g, Binder& bind, const std::vector<Var>& modalities) {
  const int d = n_modalities();
  if (static_cast<int>(modalities.size()) != d)
    throw std::invalid_argument("market features: expected " + std::to_string(d) +
                                " modality blocks, got " + std::to_string(modalities.size()));
  std::vector<Var> summaries(d), states(d);
  for (int i = 0; i < d; ++i) {
    const auto& block = g.value(modalities[i]);
    if (block.cols() != encoders[i].input_dim)
      throw std::invalid_argument("market features: modality " + std::to_string(i) +
                                  " has wrong width");
    std::vector<Var> steps;
    steps.reserve(block.rows());
    for (Eigen::Index u = 0; u < block.rows(); ++u)
      steps.push_back(ad::slice_rows(modalities[i], static_cast<int>(u), 1));
    states[i] = gru_states(g, bind, encoders[i], steps);
    summaries[i] = ad::slice_rows(states[i], static_cast<int>(block.rows()) - 1, 1);
  }

  Var fused_in;
  if (pairs.empty()) {
    fused_in = summaries[0];
  } else {
    std::vector<Var> pair_feats;
    pair_feats.reserve(pairs.size());
    int k = 0;
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j)
        pair_feats.push_back(cross_attend(g, bind, pairs[k++], summaries[i], states[j]));
    fused_in = ad::concat_cols(pair_feats);
  }
  return ad::matmul(fused_in, bind(w_fuse)) + bind(b_fuse);
}

}  // namespace hirevae
