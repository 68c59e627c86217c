#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace hirevae {

struct SimConfig {
  int n_stocks = 100;    // N
  int n_days = 1000;     // public day axis
  int seq_len = 20;      // T
  int horizon = 20;      // prediction span in days
  int n_features = 58;   // C, per-stock channels
  int n_regimes = 3;     // K_true planted regimes
  int n_modalities = 3;  // d market modality blocks
  std::uint64_t seed = 0;
  double regime_persistence = 0.9;  // stay probability of the planted chain
  double factor_strength = 0.01;    // signal scale in forward returns

  void validate() const;  // throws std::invalid_argument
};

// One date's sample: trailing feature sequences plus the realized label.
struct StockPanel {
  int date_index = 0;
  std::vector<Eigen::MatrixXd> features;  // T entries, each N x C (features[T-1] latest)
  Eigen::VectorXd forward_returns;        // N
  std::vector<std::uint8_t> valid_mask;   // N, 1 = tradeable
};

struct MarketPanel {
  int date_index = 0;
  std::vector<Eigen::MatrixXd> modalities;  // d entries, modality i is T x C_i
  double mean_forward_return = 0.0;         // equal-weight mean over valid stocks
  double realized_vol = 0.0;                // trailing 20-day index vol
};

struct PlantedTruth {
  std::vector<int> regime_labels;   // n_days entries, values 1..K_true
  Eigen::MatrixXd factor_loadings;  // K_true x C, unit-norm rows
};

// Generated corpus. Stock feature sequences of consecutive dates overlap in
// T-1 steps, so features are stored once on the day axis and panels are
// materialized on demand.
class Dataset {
 public:
  SimConfig config;
  PlantedTruth truth;

  int n_dates() const { return static_cast<int>(forward_returns_.size()); }
  StockPanel stock_panel(int t) const;
  MarketPanel market_panel(int t) const;

  // regime planted at panel date t (1-based label)
  int planted_regime(int t) const;

  void save(const std::filesystem::path& dir) const;
  static Dataset load(const std::filesystem::path& dir);

  // label-shuffle control: permutes forward_returns within each date
  Dataset shuffled_labels(std::uint64_t seed) const;

  // --- internal layout, exposed for generation and persistence ---
  int warmup_ = 0;                                  // hidden days before date 0
  std::vector<Eigen::MatrixXd> features_by_day_;    // sim_days entries, N x C
  std::vector<Eigen::VectorXd> forward_returns_;    // per date, N
  std::vector<std::vector<Eigen::MatrixXd>> modalities_;  // per date, d of T x C_i
  std::vector<double> mean_forward_return_;         // per date
  std::vector<double> realized_vol_;                // per date
};

Dataset generate(const SimConfig& config);

struct SplitGroup {
  std::vector<int> train_dates;
  std::vector<int> val_dates;
  std::vector<int> test_dates;
};

struct SplitPlan {
  std::vector<SplitGroup> groups;
  int purge_horizon = 0;
};

// Chronological expanding-window splits. Validation (train) dates whose label
// window [t, t+horizon] reaches into the test (validation) range are purged.
SplitPlan rolling_splits(int n_dates, int n_groups, int horizon);

// Close-to-close fractional return over [t, t+horizon] per stock.
Eigen::VectorXd forward_returns(const Eigen::MatrixXd& prices, int t, int horizon);

}  // namespace hirevae
