#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

namespace hirevae {

// Cross-sectional correlation metrics. "Missing" marks dates where the
// correlation is undefined (zero variance on either side); summaries skip them.
struct MetricSeries {
  std::vector<int> dates;
  std::vector<std::optional<double>> ic;
  std::vector<std::optional<double>> rank_ic;
  double mean_ic = 0.0;
  double mean_rank_ic = 0.0;
  double rank_icir = 0.0;
};

// Pearson over valid stocks; needs >= 3 of them.
std::optional<double> daily_ic(const Eigen::VectorXd& pred, const Eigen::VectorXd& real,
                               const std::vector<std::uint8_t>& mask);
// Spearman: Pearson on average ranks (ties share the average rank).
std::optional<double> daily_rank_ic(const Eigen::VectorXd& pred, const Eigen::VectorXd& real,
                                    const std::vector<std::uint8_t>& mask);
// mean / population std over non-missing entries; throws when fewer than two
// values survive or the std is zero.
double rank_icir(const std::vector<std::optional<double>>& series);

MetricSeries build_metric_series(const std::vector<int>& dates,
                                 const std::vector<Eigen::VectorXd>& preds,
                                 const std::vector<Eigen::VectorXd>& reals,
                                 const std::vector<std::vector<std::uint8_t>>& masks);

struct BacktestReport {
  std::vector<int> dates;
  std::vector<double> portfolio_returns;  // net of costs
  std::vector<double> benchmark_returns;
  std::vector<double> active_returns;
  std::vector<double> turnover;  // traded fraction of the book per period
  double annualized_active_return = 0.0;  // percent
  double information_ratio = 0.0;
  double compounded_value = 1.0;  // running product of (1 + net return)
  double cost_bps = 0.0;
  int group_count = 0;
  double periods_per_year = 0.0;
};

// Top-1-of-G: each period equal-weight the ceil(N/G) stocks with the highest
// predictions. Period net return = mean member realized return - turnover
// cost. Inputs are per rebalance period (entries spaced one horizon apart).
BacktestReport top_group_backtest(const std::vector<int>& dates,
                                  const std::vector<Eigen::VectorXd>& preds,
                                  const std::vector<Eigen::VectorXd>& realized,
                                  const std::vector<std::vector<std::uint8_t>>& masks,
                                  int groups, double cost_bps,
                                  const std::vector<double>& benchmark_returns,
                                  int horizon_days);

// Agreement between assigned and planted regimes maximized over label
// permutations (regime identities are arbitrary). Labels are 1-based.
double best_permutation_agreement(const std::vector<int>& assigned,
                                  const std::vector<int>& truth, int n_labels);

}  // namespace hirevae
