#include "hirevae/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace hirevae {

namespace {

std::vector<double> collect_valid(const Eigen::VectorXd& v,
                                  const std::vector<std::uint8_t>& mask) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (mask[static_cast<std::size_t>(i)]) out.push_back(v(i));
  return out;
}

std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

// average ranks, ties share the mean of their positions (1-based)
std::vector<double> average_ranks(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

void check_inputs(const Eigen::VectorXd& pred, const Eigen::VectorXd& real,
                  const std::vector<std::uint8_t>& mask) {
  if (pred.size() != real.size() || static_cast<Eigen::Index>(mask.size()) != pred.size())
    throw std::invalid_argument("metric: shape mismatch");
  long valid = 0;
  for (auto m : mask) valid += m ? 1 : 0;
  if (valid < 3) throw std::invalid_argument("metric: need at least 3 valid stocks");
}

}  // namespace

std::optional<double> daily_ic(const Eigen::VectorXd& pred, const Eigen::VectorXd& real,
                               const std::vector<std::uint8_t>& mask) {
  check_inputs(pred, real, mask);
  return pearson(collect_valid(pred, mask), collect_valid(real, mask));
}

std::optional<double> daily_rank_ic(const Eigen::VectorXd& pred, const Eigen::VectorXd& real,
                                    const std::vector<std::uint8_t>& mask) {
  check_inputs(pred, real, mask);
  const auto rp = average_ranks(collect_valid(pred, mask));
  const auto rr = average_ranks(collect_valid(real, mask));
  return pearson(rp, rr);
}

double rank_icir(const std::vector<std::optional<double>>& series) {
  std::vector<double> vals;
  for (const auto& v : series)
    if (v.has_value()) vals.push_back(*v);
  if (vals.size() < 2) throw std::invalid_argument("rank_icir: need >= 2 values");
  const double n = static_cast<double>(vals.size());
  const double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / n;
  double var = 0.0;
  for (double v : vals) var += (v - mean) * (v - mean);
  var /= n;  // population std, fixed for reproducibility
  if (!(var > 0.0)) throw std::invalid_argument("rank_icir: zero variance series");
  return mean / std::sqrt(var);
}

MetricSeries build_metric_series(const std::vector<int>& dates,
                                 const std::vector<Eigen::VectorXd>& preds,
                                 const std::vector<Eigen::VectorXd>& reals,
                                 const std::vector<std::vector<std::uint8_t>>& masks) {
  if (dates.size() != preds.size() || preds.size() != reals.size() ||
      reals.size() != masks.size())
    throw std::invalid_argument("metric series: length mismatch");
  MetricSeries s;
  s.dates = dates;
  for (std::size_t t = 0; t < dates.size(); ++t) {
    s.ic.push_back(daily_ic(preds[t], reals[t], masks[t]));
    s.rank_ic.push_back(daily_rank_ic(preds[t], reals[t], masks[t]));
  }
  auto mean_of = [](const std::vector<std::optional<double>>& xs) {
    double sum = 0.0;
    long n = 0;
    for (const auto& x : xs)
      if (x.has_value()) {
        sum += *x;
        ++n;
      }
    return n > 0 ? sum / static_cast<double>(n) : 0.0;
  };
  s.mean_ic = mean_of(s.ic);
  s.mean_rank_ic = mean_of(s.rank_ic);
  s.rank_icir = rank_icir(s.rank_ic);
  return s;
}

BacktestReport top_group_backtest(const std::vector<int>& dates,
                                  const std::vector<Eigen::VectorXd>& preds,
                                  const std::vector<Eigen::VectorXd>& realized,
                                  const std::vector<std::vector<std::uint8_t>>& masks,
                                  int groups, double cost_bps,
                                  const std::vector<double>& benchmark_returns,
                                  int horizon_days) {
  if (dates.empty()) throw std::invalid_argument("backtest: no periods");
  if (dates.size() != preds.size() || preds.size() != realized.size() ||
      realized.size() != masks.size() || benchmark_returns.size() != dates.size())
    throw std::invalid_argument("backtest: length mismatch");
  if (groups < 2) throw std::invalid_argument("backtest: need G >= 2");
  if (horizon_days < 1) throw std::invalid_argument("backtest: horizon must be >= 1");

  BacktestReport rep;
  rep.dates = dates;
  rep.cost_bps = cost_bps;
  rep.group_count = groups;
  rep.periods_per_year = 250.0 / static_cast<double>(horizon_days);
  const double cost_rate = cost_bps * 1e-4;

  std::set<Eigen::Index> prev;
  for (std::size_t t = 0; t < dates.size(); ++t) {
    const auto& p = preds[t];
    const auto& r = realized[t];
    const auto& m = masks[t];
    std::vector<Eigen::Index> valid;
    for (Eigen::Index i = 0; i < p.size(); ++i)
      if (m[static_cast<std::size_t>(i)]) valid.push_back(i);
    if (static_cast<int>(valid.size()) < groups)
      throw std::invalid_argument("backtest: G exceeds the tradeable universe");

    const auto n_hold =
        static_cast<std::size_t>((valid.size() + static_cast<std::size_t>(groups) - 1) /
                                 static_cast<std::size_t>(groups));
    std::stable_sort(valid.begin(), valid.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return p(a) > p(b); });
    std::set<Eigen::Index> held(valid.begin(), valid.begin() + static_cast<long>(n_hold));

    double gross = 0.0;
    for (Eigen::Index i : held) gross += r(i);
    gross /= static_cast<double>(held.size());

    double turn;
    if (t == 0) {
      turn = 1.0;  // initial buy-in
    } else {
      std::size_t exits = 0, entries = 0;
      for (Eigen::Index i : prev)
        if (!held.count(i)) ++exits;
      for (Eigen::Index i : held)
        if (!prev.count(i)) ++entries;
      turn = static_cast<double>(exits) / static_cast<double>(prev.size()) +
             static_cast<double>(entries) / static_cast<double>(held.size());
    }
    const double net = gross - turn * cost_rate;

    rep.turnover.push_back(turn);
    rep.portfolio_returns.push_back(net);
    rep.benchmark_returns.push_back(benchmark_returns[t]);
    rep.active_returns.push_back(net - benchmark_returns[t]);
    rep.compounded_value *= 1.0 + net;
    prev = std::move(held);
  }

  const double n = static_cast<double>(rep.active_returns.size());
  const double mean_active =
      std::accumulate(rep.active_returns.begin(), rep.active_returns.end(), 0.0) / n;
  double var = 0.0;
  for (double a : rep.active_returns) var += (a - mean_active) * (a - mean_active);
  var /= n;
  rep.annualized_active_return = mean_active * rep.periods_per_year * 100.0;
  rep.information_ratio =
      var > 0.0 ? mean_active / std::sqrt(var) * std::sqrt(rep.periods_per_year) : 0.0;
  return rep;
}

double best_permutation_agreement(const std::vector<int>& assigned,
                                  const std::vector<int>& truth, int n_labels) {
  if (assigned.size() != truth.size() || assigned.empty())
    throw std::invalid_argument("agreement: series mismatch");
  std::vector<int> perm(n_labels);
  std::iota(perm.begin(), perm.end(), 1);
  double best = 0.0;
  do {
    long hits = 0;
    for (std::size_t t = 0; t < assigned.size(); ++t) {
      const int a = assigned[t];
      if (a < 1 || a > n_labels) continue;
      if (perm[static_cast<std::size_t>(a - 1)] == truth[t]) ++hits;
    }
    best = std::max(best, static_cast<double>(hits) / static_cast<double>(assigned.size()));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace hirevae
