#pragma once

#include "hirevae/model.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace hirevae {

struct TrainConfig {
  std::string variant = "hirevae";
  double learning_rate = 1e-3;
  int epochs = 8;
  int batch_size = 4;  // consecutive dates per batch
  int n_regimes = 3;
  double beta = 0.99;
  // loss weights; lambda_rec stays 1 by convention
  double lambda_rec = 1.0;
  double lambda_hier = 0.1;
  double lambda_reg = 0.01;
  double lambda_score = 1.0;
  std::uint64_t seed = 0;
  bool score_fit = true;
  bool regime_on_fused = false;       // regime learner reads v instead of the latent
  bool freeze_regimes = false;        // pin centers during prediction streaming
  bool reset_state_each_epoch = false;
  // network sizes
  int stock_hidden = 64;
  int market_mod_hidden = 32;
  int pair_dim = 64;
  int market_fused = 64;
  int market_latent = 16;
  int stock_latent = 32;
  int head_trunk = 32;
  int decoder_hidden = 64;

  void validate() const;
};

ModelConfig resolve_model_config(const TrainConfig& cfg, int n_features, int seq_len,
                                 const std::vector<int>& modality_dims);
ModelConfig resolve_model_config(const TrainConfig& cfg, const Dataset& data);

// Everything fit() froze: parameters, the online regime state carried into
// test-time streaming, and the config echoes needed to rebuild the model.
struct Checkpoint {
  TrainConfig train_config;
  ModelConfig model_config;
  std::vector<std::pair<std::string, Eigen::MatrixXd>> params;  // registry order
  RegimeState regime_state;
  VolRegimeState vol_state;
  std::vector<double> loss_history;         // per optimizer step, total loss
  std::vector<double> val_rank_ic_history;  // per epoch
  bool trained = false;
  int best_epoch = -1;

  void save(const std::filesystem::path& dir) const;
  static Checkpoint load(const std::filesystem::path& dir);

  // Rebuilds the model and installs the stored parameter values.
  std::unique_ptr<Model> build_model() const;
};

}  // namespace hirevae
