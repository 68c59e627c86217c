#include <doctest.h>

#include "hirevae/market_sim.hpp"
#include "hirevae/rng.hpp"
#include "oracles.hpp"

#include <filesystem>

using namespace hirevae;

namespace {

SimConfig small_config() {
  SimConfig c;
  c.n_stocks = 12;
  c.n_days = 160;
  c.seq_len = 8;
  c.horizon = 5;
  c.n_features = 6;
  c.n_regimes = 3;
  c.n_modalities = 3;
  c.seed = 7;
  c.regime_persistence = 0.9;
  c.factor_strength = 0.05;
  return c;
}

bool datasets_equal(const Dataset& a, const Dataset& b) {
  if (a.n_dates() != b.n_dates()) return false;
  if (a.truth.regime_labels != b.truth.regime_labels) return false;
  if (a.truth.factor_loadings != b.truth.factor_loadings) return false;
  for (std::size_t s = 0; s < a.features_by_day_.size(); ++s)
    if (a.features_by_day_[s] != b.features_by_day_[s]) return false;
  for (int t = 0; t < a.n_dates(); ++t) {
    if (a.forward_returns_[t] != b.forward_returns_[t]) return false;
    if (a.mean_forward_return_[t] != b.mean_forward_return_[t]) return false;
    if (a.realized_vol_[t] != b.realized_vol_[t]) return false;
    for (std::size_t m = 0; m < a.modalities_[t].size(); ++m)
      if (a.modalities_[t][m] != b.modalities_[t][m]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("generation is bit-identical for the same config") {
  const auto cfg = small_config();
  CHECK(datasets_equal(generate(cfg), generate(cfg)));
}

TEST_CASE("different seeds give different data") {
  auto cfg = small_config();
  const Dataset a = generate(cfg);
  cfg.seed = 8;
  CHECK(!datasets_equal(a, generate(cfg)));
}

TEST_CASE("zero factor strength decorrelates features from returns") {
  auto cfg = small_config();
  cfg.factor_strength = 0.0;
  cfg.n_stocks = 40;
  cfg.n_days = 300;
  const Dataset ds = generate(cfg);
  // Monte-Carlo oracle: pooled correlation between the planted signal and the
  // realized labels across > 1e4 (date, stock) samples
  std::vector<double> sig, ret;
  for (int t = 0; t < ds.n_dates(); ++t) {
    const StockPanel p = ds.stock_panel(t);
    const int k = ds.planted_regime(t);
    const Eigen::VectorXd s =
        p.features.back() * ds.truth.factor_loadings.row(k - 1).transpose();
    for (int i = 0; i < cfg.n_stocks; ++i) {
      sig.push_back(s(i));
      ret.push_back(p.forward_returns(i) - p.forward_returns.mean());  // strip the market move
    }
  }
  REQUIRE(sig.size() >= 10000);
  CHECK(std::abs(oracles::pearson(sig, ret)) < 0.05);
}

TEST_CASE("high factor strength plants a recoverable signal") {
  auto cfg = small_config();
  cfg.factor_strength = 0.05;
  cfg.n_stocks = 40;
  cfg.n_days = 300;
  const Dataset ds = generate(cfg);
  std::vector<double> sig, ret;
  for (int t = 0; t < ds.n_dates(); ++t) {
    const StockPanel p = ds.stock_panel(t);
    const int k = ds.planted_regime(t);
    const Eigen::VectorXd s =
        p.features.back() * ds.truth.factor_loadings.row(k - 1).transpose();
    for (int i = 0; i < cfg.n_stocks; ++i) {
      sig.push_back(s(i));
      ret.push_back(p.forward_returns(i) - p.forward_returns.mean());
    }
  }
  CHECK(oracles::pearson(sig, ret) > 0.5);
}

TEST_CASE("absorbing chain keeps one regime") {
  auto cfg = small_config();
  cfg.regime_persistence = 1.0;
  const Dataset ds = generate(cfg);
  for (int label : ds.truth.regime_labels) CHECK(label == ds.truth.regime_labels.front());
}

TEST_CASE("planted volatility is monotone in the regime label") {
  auto cfg = small_config();
  cfg.n_days = 5200;
  cfg.n_stocks = 3;
  cfg.n_features = 4;
  cfg.regime_persistence = 0.95;
  const Dataset ds = generate(cfg);
  Eigen::Vector3d sums = Eigen::Vector3d::Zero();
  Eigen::Vector3i counts = Eigen::Vector3i::Zero();
  for (int t = 0; t < ds.n_dates(); ++t) {
    const int k = ds.planted_regime(t);
    sums(k - 1) += ds.market_panel(t).realized_vol;
    counts(k - 1) += 1;
  }
  REQUIRE(counts.minCoeff() > 100);
  const double v1 = sums(0) / counts(0), v2 = sums(1) / counts(1), v3 = sums(2) / counts(2);
  CHECK(v1 > v2);
  CHECK(v2 > v3);
}

TEST_CASE("panel accessors honor the contracts") {
  const auto cfg = small_config();
  const Dataset ds = generate(cfg);
  REQUIRE(ds.n_dates() == cfg.n_days - cfg.horizon);
  const StockPanel sp = ds.stock_panel(3);
  CHECK(static_cast<int>(sp.features.size()) == cfg.seq_len);
  CHECK(sp.features.front().rows() == cfg.n_stocks);
  CHECK(sp.features.front().cols() == cfg.n_features);
  CHECK(sp.forward_returns.size() == cfg.n_stocks);
  for (auto m : sp.valid_mask) CHECK(m == 1);

  const MarketPanel mp = ds.market_panel(3);
  REQUIRE(static_cast<int>(mp.modalities.size()) == cfg.n_modalities);
  for (const auto& block : mp.modalities) CHECK(block.rows() == cfg.seq_len);
  CHECK(mp.mean_forward_return ==
        doctest::Approx(sp.forward_returns.mean()).epsilon(1e-6));

  // consecutive panels share their overlapping feature window
  const StockPanel sp4 = ds.stock_panel(4);
  CHECK(sp.features[1] == sp4.features[0]);

  CHECK_THROWS_AS((void)ds.stock_panel(ds.n_dates()), std::out_of_range);
}

TEST_CASE("too-small day count is rejected") {
  auto cfg = small_config();
  cfg.n_days = cfg.seq_len + cfg.horizon;  // not enough room for one sample
  CHECK_THROWS_AS((void)generate(cfg), std::invalid_argument);
  cfg.n_days = 0;
  CHECK_THROWS_AS((void)generate(cfg), std::invalid_argument);
}

TEST_CASE("invalid configs are rejected") {
  auto cfg = small_config();
  cfg.regime_persistence = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = small_config();
  cfg.factor_strength = -1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = small_config();
  cfg.seq_len = 1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("rolling splits purge label leakage") {
  const SplitPlan plan = rolling_splits(100, 1, 20);
  REQUIRE(plan.groups.size() == 1);
  const auto& g = plan.groups.front();
  REQUIRE(!g.train_dates.empty());
  REQUIRE(!g.val_dates.empty());
  REQUIRE(!g.test_dates.empty());
  CHECK(g.val_dates.back() <= g.test_dates.front() - 20);

  // ordering and purge invariants on every group of a larger plan
  const SplitPlan big = rolling_splits(1400, 14, 20);
  REQUIRE(big.groups.size() == 14);
  int prev_test_end = -1;
  for (const auto& grp : big.groups) {
    CHECK(grp.train_dates.back() < grp.val_dates.front());
    CHECK(grp.val_dates.back() < grp.test_dates.front());
    for (int t : grp.val_dates) CHECK(t + 20 < grp.test_dates.front());
    for (int t : grp.train_dates) CHECK(t + 20 < grp.val_dates.front());
    CHECK(grp.test_dates.front() > prev_test_end);  // disjoint, in order
    prev_test_end = grp.test_dates.back();
  }
}

TEST_CASE("rolling splits reject impossible requests") {
  CHECK_THROWS_AS((void)rolling_splits(100, 0, 20), std::invalid_argument);
  CHECK_THROWS_AS((void)rolling_splits(30, 40, 20), std::invalid_argument);
  CHECK_THROWS_AS((void)rolling_splits(45, 1, 20), std::invalid_argument);
}

TEST_CASE("forward returns from a price panel") {
  Eigen::MatrixXd flat = Eigen::MatrixXd::Constant(30, 4, 50.0);
  CHECK(forward_returns(flat, 3, 10).cwiseAbs().maxCoeff() == 0.0);

  Eigen::MatrixXd doubling(21, 2);
  for (int t = 0; t <= 20; ++t) {
    doubling(t, 0) = 100.0 * std::pow(2.0, t / 20.0);
    doubling(t, 1) = 10.0;
  }
  const Eigen::VectorXd r = forward_returns(doubling, 0, 20);
  CHECK(r(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r(1) == doctest::Approx(0.0));

  // random walk panel vs an independently coded ratio computation
  Rng rng(3);
  Eigen::MatrixXd walk(40, 5);
  for (int j = 0; j < 5; ++j) {
    walk(0, j) = 100.0;
    for (int t = 1; t < 40; ++t) walk(t, j) = walk(t - 1, j) * std::exp(0.01 * rng.gaussian());
  }
  const Eigen::VectorXd got = forward_returns(walk, 7, 13);
  for (int j = 0; j < 5; ++j) {
    const double expected = (walk(20, j) - walk(7, j)) / walk(7, j);
    CHECK(got(j) == doctest::Approx(expected).epsilon(1e-12));
  }

  Eigen::MatrixXd bad = flat;
  bad(5, 2) = -1.0;
  CHECK_THROWS_AS((void)forward_returns(bad, 0, 10), std::invalid_argument);
  CHECK_THROWS_AS((void)forward_returns(flat, 25, 10), std::invalid_argument);
}

TEST_CASE("dataset round-trips through the directory format") {
  const auto cfg = small_config();
  const Dataset ds = generate(cfg);
  const auto dir = std::filesystem::temp_directory_path() / "hirevae_test_dataset";
  std::filesystem::remove_all(dir);
  ds.save(dir);
  const Dataset back = Dataset::load(dir);
  CHECK(datasets_equal(ds, back));
  std::filesystem::remove_all(dir);
}

TEST_CASE("label shuffling permutes within dates and keeps the mean") {
  const auto cfg = small_config();
  const Dataset ds = generate(cfg);
  const Dataset sh = ds.shuffled_labels(99);
  bool any_moved = false;
  for (int t = 0; t < ds.n_dates(); ++t) {
    Eigen::VectorXd a = ds.forward_returns_[t];
    Eigen::VectorXd b = sh.forward_returns_[t];
    CHECK(a.mean() == doctest::Approx(b.mean()).epsilon(1e-12));
    std::sort(a.data(), a.data() + a.size());
    std::sort(b.data(), b.data() + b.size());
    CHECK(a == b);
    if (ds.forward_returns_[t] != sh.forward_returns_[t]) any_moved = true;
  }
  CHECK(any_moved);
}
