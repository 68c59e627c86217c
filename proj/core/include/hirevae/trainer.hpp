#pragma once

#include "hirevae/checkpoint.hpp"
#include "hirevae/model.hpp"

#include <cstdint>
#include <vector>

namespace hirevae {

// Streaming access to the date-ordered corpus. The trainer and predictor
// announce the date they are about to consume through on_advance(); access
// guards in tests hook that to flag any future-indexed read.
class DataSource {
 public:
  virtual ~DataSource() = default;
  virtual int n_dates() const = 0;
  virtual int n_stocks() const = 0;
  virtual StockPanel stock_panel(int t) = 0;
  virtual MarketPanel market_panel(int t) = 0;
  virtual void on_advance(int t) { (void)t; }
};

class DatasetSource final : public DataSource {
 public:
  explicit DatasetSource(const Dataset& ds) : ds_(&ds) {}
  int n_dates() const override { return ds_->n_dates(); }
  int n_stocks() const override { return ds_->config.n_stocks; }
  StockPanel stock_panel(int t) override { return ds_->stock_panel(t); }
  MarketPanel market_panel(int t) override { return ds_->market_panel(t); }

 private:
  const Dataset* ds_;
};

struct StepLosses {
  double rec = 0.0;
  double hier = 0.0;
  double reg = 0.0;
  double score = 0.0;
  double total = 0.0;
};

// Per-batch regime resolution. Live runs the online path (stabilize + EMA +
// assignment) and advances the trainer's state; Fixed replays recorded
// assignments and score-fit centers without touching any state, which makes
// the batch loss a pure function of the parameters for gradient checking.
struct RegimeDecision {
  enum class Mode { Live, Fixed };
  Mode mode = Mode::Live;
  std::vector<int> assigned;          // per date, 1-based
  std::vector<double> center_mu;      // per date, score-fit constants
  std::vector<double> center_sigma;   // per date
};

struct BatchNoise {
  std::vector<Eigen::MatrixXd> market;  // per date, 1 x H_m (empty when unused)
  std::vector<Eigen::MatrixXd> stock;   // per date, N x H_s (empty when unused)
};

class Trainer {
 public:
  Trainer(const TrainConfig& cfg, const ModelConfig& mcfg);

  // One optimizer step over a batch of consecutive dates. Dates must be
  // strictly increasing and later than anything consumed this epoch.
  StepLosses train_step(DataSource& data, const std::vector<int>& dates);

  // Builds the full batch loss into g. Exposed for gradient verification.
  ad::Var build_batch_loss(ad::Graph& g, Binder& bind, DataSource& data,
                           const std::vector<int>& dates, const BatchNoise& noise,
                           RegimeDecision& decision, StepLosses* breakdown = nullptr);
  BatchNoise draw_noise(int n_stocks, int n_dates);

  // Full protocol: epochs over the train dates, epoch selection by validation
  // RankIC (prior-path predictions on the purged validation dates), best
  // epoch's parameters and regime state frozen into the checkpoint.
  Checkpoint fit(DataSource& data, const SplitGroup& split);

  void begin_epoch();

  Model& model() { return model_; }
  RegimeState& regime_state() { return regime_state_; }
  VolRegimeState& vol_state() { return vol_state_; }
  const std::vector<double>& loss_history() const { return loss_history_; }
  long clustering_updates() const { return clustering_updates_; }

 private:
  TrainConfig cfg_;
  Model model_;
  RegimeState regime_state_;
  VolRegimeState vol_state_;
  Adam adam_;
  Rng noise_rng_;
  int last_consumed_ = -1;
  long clustering_updates_ = 0;
  std::vector<double> loss_history_;
  std::vector<double> val_history_;

  double validation_rank_ic(DataSource& data, const std::vector<int>& val_dates);
  Checkpoint make_checkpoint() const;
};

struct PredictOutput {
  ReturnPrediction prediction;
  bool has_regime_diag = false;
  RegimeAssignment regime_diag;  // learned-clustering variants only
};

// Date-ordered prediction stream over a frozen checkpoint. The regime state
// keeps drifting via the online update unless freeze_regimes pins it.
class StreamingPredictor {
 public:
  explicit StreamingPredictor(const Checkpoint& ckpt);
  StreamingPredictor(const Checkpoint& ckpt, bool freeze_regimes);

  PredictOutput predict_date(const StockPanel& stocks, const MarketPanel& market);
  std::vector<PredictOutput> predict_range(DataSource& data, const std::vector<int>& dates);

  const RegimeState& regime_state() const { return state_; }
  Model& model() { return *model_; }

 private:
  std::unique_ptr<Model> model_;
  RegimeState state_;
  VolRegimeState vol_;
  bool freeze_;
};

}  // namespace hirevae
