#include "hirevae/market_sim.hpp"

#include "hirevae/io.hpp"
#include "hirevae/params.hpp"
#include "hirevae/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace hirevae {

namespace {

using json = nlohmann::json;

constexpr double kFeatureAr1 = 0.9;   // persistence of per-stock feature channels
constexpr double kIdioVol = 0.04;     // idiosyncratic noise on forward returns
constexpr int kVolWindow = 20;        // trailing window for realized_vol

// Modality i reuses the three family definitions (momentum, relative volume,
// volatility) with window sets stretched for every extra block of three.
int modality_family(int i) { return i % 3; }

std::vector<int> modality_windows(int i) {
  const int stretch = 1 + i / 3;
  return {5 * stretch, 10 * stretch, 20 * stretch};
}

int max_window(const SimConfig& cfg) {
  int w = kVolWindow;
  for (int i = 0; i < cfg.n_modalities; ++i)
    for (int x : modality_windows(i)) w = std::max(w, x);
  return w;
}

// per-regime daily index vol, strictly decreasing in the regime label
double regime_vol(int k, int n_regimes) {
  if (n_regimes == 1) return 0.015;
  const double hi = 0.030, lo = 0.006;
  const double f = static_cast<double>(k - 1) / static_cast<double>(n_regimes - 1);
  return hi * std::pow(lo / hi, f);
}

double regime_drift(int k, int n_regimes) {
  if (n_regimes == 1) return 0.0004;
  const double bear = -0.0012, bull = 0.0008;
  const double f = static_cast<double>(k - 1) / static_cast<double>(n_regimes - 1);
  return bear + f * (bull - bear);
}

}  // namespace

void SimConfig::validate() const {
  if (n_stocks < 1 || n_days < 1 || n_features < 1 || n_regimes < 1 || n_modalities < 1)
    throw std::invalid_argument("sim: all counts must be >= 1");
  if (seq_len < 2) throw std::invalid_argument("sim: seq_len must be >= 2");
  if (horizon < 1) throw std::invalid_argument("sim: horizon must be >= 1");
  if (!(regime_persistence > 0.0 && regime_persistence <= 1.0))
    throw std::invalid_argument("sim: regime_persistence must lie in (0, 1]");
  if (factor_strength < 0.0)
    throw std::invalid_argument("sim: factor_strength must be nonnegative");
  if (n_days <= seq_len + horizon)
    throw std::invalid_argument("sim: n_days too small for one sample (need > T + horizon)");
}

StockPanel Dataset::stock_panel(int t) const {
  if (t < 0 || t >= n_dates()) throw std::out_of_range("stock_panel: date out of range");
  StockPanel p;
  p.date_index = t;
  const int T = config.seq_len;
  const int last_day = warmup_ + t;
  p.features.reserve(T);
  for (int u = 0; u < T; ++u) p.features.push_back(features_by_day_[last_day - T + 1 + u]);
  p.forward_returns = forward_returns_[t];
  p.valid_mask.assign(config.n_stocks, 1);
  return p;
}

MarketPanel Dataset::market_panel(int t) const {
  if (t < 0 || t >= n_dates()) throw std::out_of_range("market_panel: date out of range");
  MarketPanel p;
  p.date_index = t;
  p.modalities = modalities_[t];
  p.mean_forward_return = mean_forward_return_[t];
  p.realized_vol = realized_vol_[t];
  return p;
}

int Dataset::planted_regime(int t) const {
  if (t < 0 || t >= static_cast<int>(truth.regime_labels.size()))
    throw std::out_of_range("planted_regime: date out of range");
  return truth.regime_labels[t];
}

Dataset Dataset::shuffled_labels(std::uint64_t seed) const {
  Dataset out = *this;
  Rng rng(derive_seed(seed, "label-shuffle"));
  const int n = config.n_stocks;
  for (auto& fr : out.forward_returns_) {
    for (int i = n - 1; i > 0; --i) {
      const int j = rng.uniform_int(0, i);
      std::swap(fr(i), fr(j));
    }
  }
  // equal-weight mean is permutation invariant; market side unchanged
  return out;
}

Dataset generate(const SimConfig& config) {
  config.validate();
  const int N = config.n_stocks, T = config.seq_len, C = config.n_features;
  const int K = config.n_regimes, d = config.n_modalities, H = config.horizon;
  const int maxw = max_window(config);
  const int warmup = T + maxw;
  const int sim_days = warmup + config.n_days;

  Dataset ds;
  ds.config = config;
  ds.warmup_ = warmup;

  // planted regime chain over all simulated days
  Rng chain_rng(derive_seed(config.seed, "regime-chain"));
  std::vector<int> chain(sim_days);
  chain[0] = chain_rng.uniform_int(1, K);
  for (int s = 1; s < sim_days; ++s) {
    if (K == 1 || chain_rng.uniform() < config.regime_persistence) {
      chain[s] = chain[s - 1];
    } else {
      int next = chain_rng.uniform_int(1, K - 1);
      if (next >= chain[s - 1]) ++next;  // uniform over the other K-1 regimes
      chain[s] = next;
    }
  }
  ds.truth.regime_labels.assign(chain.begin() + warmup, chain.end());

  // index returns and volume, regime-conditioned
  Rng mkt_rng(derive_seed(config.seed, "index-returns"));
  Rng volm_rng(derive_seed(config.seed, "index-volume"));
  std::vector<double> idx_ret(sim_days), idx_level(sim_days), volume(sim_days);
  const double vol1 = regime_vol(1, K);
  double level = 1.0;
  for (int s = 0; s < sim_days; ++s) {
    const int k = chain[s];
    idx_ret[s] = mkt_rng.gaussian(regime_drift(k, K), regime_vol(k, K));
    level *= 1.0 + idx_ret[s];
    idx_level[s] = level;
    volume[s] = std::exp(std::log(1.0 + 2.0 * regime_vol(k, K) / vol1) +
                         0.3 * volm_rng.gaussian());
  }

  // per-stock feature channels: stationary AR(1), unit marginal variance
  Rng feat_rng(derive_seed(config.seed, "stock-features"));
  const double innov = std::sqrt(1.0 - kFeatureAr1 * kFeatureAr1);
  ds.features_by_day_.reserve(sim_days);
  Eigen::MatrixXd state(N, C);
  for (int i = 0; i < N; ++i)
    for (int c = 0; c < C; ++c) state(i, c) = feat_rng.gaussian();
  ds.features_by_day_.push_back(snap_f32(state));
  for (int s = 1; s < sim_days; ++s) {
    for (int i = 0; i < N; ++i)
      for (int c = 0; c < C; ++c)
        state(i, c) = kFeatureAr1 * state(i, c) + innov * feat_rng.gaussian();
    ds.features_by_day_.push_back(snap_f32(state));
  }

  // regime-specific loadings, unit L2 norm per row
  Rng load_rng(derive_seed(config.seed, "factor-loadings"));
  ds.truth.factor_loadings.resize(K, C);
  for (int k = 0; k < K; ++k) {
    for (int c = 0; c < C; ++c) ds.truth.factor_loadings(k, c) = load_rng.gaussian();
    ds.truth.factor_loadings.row(k).normalize();
  }
  ds.truth.factor_loadings = snap_f32(ds.truth.factor_loadings);

  // emitted dates: each needs horizon future days for the label
  const int n_dates = config.n_days - H;
  Rng noise_rng(derive_seed(config.seed, "return-noise"));
  ds.forward_returns_.reserve(n_dates);
  ds.modalities_.reserve(n_dates);
  for (int t = 0; t < n_dates; ++t) {
    const int s0 = warmup + t;
    const int k = chain[s0];

    // index forward return over (s0, s0+H]
    double mkt_fwd = 1.0;
    for (int s = s0 + 1; s <= s0 + H; ++s) mkt_fwd *= 1.0 + idx_ret[s];
    mkt_fwd -= 1.0;

    Eigen::VectorXd signal =
        ds.features_by_day_[s0] * ds.truth.factor_loadings.row(k - 1).transpose();
    Eigen::VectorXd fr(N);
    for (int i = 0; i < N; ++i)
      fr(i) = config.factor_strength * signal(i) + mkt_fwd + noise_rng.gaussian(0.0, kIdioVol);
    fr = snap_f32(fr);
    ds.forward_returns_.push_back(fr);
    ds.mean_forward_return_.push_back(snap_f32(fr.mean()));

    // market modality sequences over the trailing T days
    std::vector<Eigen::MatrixXd> mods;
    mods.reserve(d);
    for (int m = 0; m < d; ++m) {
      const auto windows = modality_windows(m);
      const int fam = modality_family(m);
      Eigen::MatrixXd block(T, static_cast<int>(windows.size()));
      for (int u = 0; u < T; ++u) {
        const int s = s0 - T + 1 + u;
        for (std::size_t wi = 0; wi < windows.size(); ++wi) {
          const int w = windows[wi];
          double v = 0.0;
          if (fam == 0) {  // momentum: trailing cumulative index return
            v = idx_level[s] / idx_level[s - w] - 1.0;
          } else if (fam == 1) {  // log relative volume vs trailing mean
            double mu = 0.0;
            for (int q = s - w; q < s; ++q) mu += volume[q];
            mu /= w;
            v = std::log(volume[s] / mu);
          } else {  // trailing volatility of daily index returns
            double mu = 0.0;
            for (int q = s - w + 1; q <= s; ++q) mu += idx_ret[q];
            mu /= w;
            double var = 0.0;
            for (int q = s - w + 1; q <= s; ++q) var += (idx_ret[q] - mu) * (idx_ret[q] - mu);
            v = std::sqrt(var / w);
          }
          block(u, static_cast<int>(wi)) = v;
        }
      }
      mods.push_back(snap_f32(block));
    }
    ds.modalities_.push_back(std::move(mods));

    // trailing 20-day index vol, the rule baseline's input
    {
      double mu = 0.0;
      for (int q = s0 - kVolWindow + 1; q <= s0; ++q) mu += idx_ret[q];
      mu /= kVolWindow;
      double var = 0.0;
      for (int q = s0 - kVolWindow + 1; q <= s0; ++q)
        var += (idx_ret[q] - mu) * (idx_ret[q] - mu);
      ds.realized_vol_.push_back(snap_f32(std::sqrt(var / kVolWindow)));
    }
  }
  return ds;
}

SplitPlan rolling_splits(int n_dates, int n_groups, int horizon) {
  if (n_groups < 1) throw std::invalid_argument("splits: n_groups must be >= 1");
  if (horizon < 0) throw std::invalid_argument("splits: horizon must be >= 0");
  const int first_test = n_dates / 2;
  const int seg = (n_dates - first_test) / n_groups;
  if (seg < 1) throw std::invalid_argument("splits: not enough dates for the requested groups");

  SplitPlan plan;
  plan.purge_horizon = horizon;
  for (int g = 0; g < n_groups; ++g) {
    SplitGroup grp;
    const int test_start = first_test + g * seg;
    const int test_end = (g == n_groups - 1) ? n_dates : test_start + seg;
    for (int t = test_start; t < test_end; ++t) grp.test_dates.push_back(t);

    const int avail = test_start - horizon;  // usable history end (exclusive)
    if (avail < 2) throw std::invalid_argument("splits: not enough history before test");
    const int val_len = std::max(1, avail / 5);

    // candidate validation block ending at the test boundary, then purge any
    // date whose label window reaches into the test range
    const int val_cand_start = std::max(1, test_start - horizon - val_len);
    for (int t = val_cand_start; t < test_start; ++t)
      if (t + horizon < test_start) grp.val_dates.push_back(t);
    if (grp.val_dates.empty()) throw std::invalid_argument("splits: empty validation block");

    const int val_start = grp.val_dates.front();
    for (int t = 0; t < val_start; ++t)
      if (t + horizon < val_start) grp.train_dates.push_back(t);
    if (grp.train_dates.empty()) throw std::invalid_argument("splits: empty training block");

    plan.groups.push_back(std::move(grp));
  }
  return plan;
}

Eigen::VectorXd forward_returns(const Eigen::MatrixXd& prices, int t, int horizon) {
  if (horizon < 1) throw std::invalid_argument("forward_returns: horizon must be >= 1");
  if (t < 0 || t + horizon >= prices.rows())
    throw std::invalid_argument("forward_returns: window exceeds the price panel");
  if ((prices.array() <= 0.0).any())
    throw std::invalid_argument("forward_returns: prices must be positive");
  const Eigen::Index n = prices.cols();
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) out(i) = prices(t + horizon, i) / prices(t, i) - 1.0;
  return out;
}

// --- persistence -------------------------------------------------------------

namespace {

std::vector<double> flatten_days(const std::vector<Eigen::MatrixXd>& days) {
  std::vector<double> flat;
  if (days.empty()) return flat;
  flat.reserve(days.size() * static_cast<std::size_t>(days.front().size()));
  for (const auto& m : days)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) flat.push_back(m(i, j));
  return flat;
}

json config_to_json(const SimConfig& c) {
  return json{{"n_stocks", c.n_stocks},
              {"n_days", c.n_days},
              {"seq_len", c.seq_len},
              {"horizon", c.horizon},
              {"n_features", c.n_features},
              {"n_regimes", c.n_regimes},
              {"n_modalities", c.n_modalities},
              {"seed", c.seed},
              {"regime_persistence", c.regime_persistence},
              {"factor_strength", c.factor_strength}};
}

SimConfig config_from_json(const json& j) {
  SimConfig c;
  c.n_stocks = j.at("n_stocks");
  c.n_days = j.at("n_days");
  c.seq_len = j.at("seq_len");
  c.horizon = j.at("horizon");
  c.n_features = j.at("n_features");
  c.n_regimes = j.at("n_regimes");
  c.n_modalities = j.at("n_modalities");
  c.seed = j.at("seed");
  c.regime_persistence = j.at("regime_persistence");
  c.factor_strength = j.at("factor_strength");
  return c;
}

}  // namespace

void Dataset::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  const int N = config.n_stocks, C = config.n_features, T = config.seq_len;
  const int D = n_dates();
  const int S = static_cast<int>(features_by_day_.size());

  io::write_f32(dir / "features_by_day.f32", flatten_days(features_by_day_));

  std::vector<double> fr;
  fr.reserve(static_cast<std::size_t>(D) * N);
  for (const auto& v : forward_returns_)
    for (Eigen::Index i = 0; i < v.size(); ++i) fr.push_back(v(i));
  io::write_f32(dir / "forward_returns.f32", fr);

  json mod_meta = json::array();
  for (int m = 0; m < config.n_modalities; ++m) {
    std::vector<Eigen::MatrixXd> blocks;
    blocks.reserve(D);
    for (int t = 0; t < D; ++t) blocks.push_back(modalities_[t][m]);
    const std::string file = "modality_" + std::to_string(m) + ".f32";
    io::write_f32(dir / file, flatten_days(blocks));
    mod_meta.push_back(json{{"file", file},
                            {"shape", {D, T, blocks.front().cols()}}});
  }

  std::vector<double> scalars;
  scalars.reserve(static_cast<std::size_t>(D) * 2);
  for (int t = 0; t < D; ++t) {
    scalars.push_back(mean_forward_return_[t]);
    scalars.push_back(realized_vol_[t]);
  }
  io::write_f32(dir / "market_scalars.f32", scalars);

  io::write_mat_f32(dir / "factor_loadings.f32", truth.factor_loadings);

  std::vector<std::int32_t> labels(truth.regime_labels.begin(), truth.regime_labels.end());
  io::write_i32(dir / "regime_labels.i32", labels);

  json manifest{
      {"format", "hirevae-dataset-v1"},
      {"config", config_to_json(config)},
      {"n_dates", D},
      {"sim_days", S},
      {"warmup", warmup_},
      {"arrays",
       {{"features_by_day", {{"file", "features_by_day.f32"}, {"shape", {S, N, C}}, {"dtype", "f32"}}},
        {"forward_returns", {{"file", "forward_returns.f32"}, {"shape", {D, N}}, {"dtype", "f32"}}},
        {"market_scalars",
         {{"file", "market_scalars.f32"}, {"shape", {D, 2}}, {"dtype", "f32"},
          {"columns", {"mean_forward_return", "realized_vol"}}}},
        {"factor_loadings",
         {{"file", "factor_loadings.f32"}, {"shape", {config.n_regimes, C}}, {"dtype", "f32"}}},
        {"regime_labels", {{"file", "regime_labels.i32"}, {"shape", {config.n_days}}, {"dtype", "i32"}}},
        {"modalities", mod_meta}}}};
  io::write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

Dataset Dataset::load(const std::filesystem::path& dir) {
  const json manifest = json::parse(io::read_text(dir / "manifest.json"));
  if (manifest.at("format") != "hirevae-dataset-v1")
    throw std::runtime_error("unrecognized dataset format in " + dir.string());

  Dataset ds;
  ds.config = config_from_json(manifest.at("config"));
  ds.warmup_ = manifest.at("warmup");
  const int N = ds.config.n_stocks, C = ds.config.n_features, T = ds.config.seq_len;
  const int D = manifest.at("n_dates");
  const int S = manifest.at("sim_days");

  {
    auto flat = io::read_f32(dir / "features_by_day.f32");
    if (static_cast<long long>(flat.size()) != 1LL * S * N * C)
      throw std::runtime_error("features_by_day.f32 size mismatch");
    ds.features_by_day_.reserve(S);
    std::size_t k = 0;
    for (int s = 0; s < S; ++s) {
      Eigen::MatrixXd m(N, C);
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < C; ++j) m(i, j) = flat[k++];
      ds.features_by_day_.push_back(std::move(m));
    }
  }
  {
    auto flat = io::read_f32(dir / "forward_returns.f32");
    if (static_cast<long long>(flat.size()) != 1LL * D * N)
      throw std::runtime_error("forward_returns.f32 size mismatch");
    std::size_t k = 0;
    for (int t = 0; t < D; ++t) {
      Eigen::VectorXd v(N);
      for (int i = 0; i < N; ++i) v(i) = flat[k++];
      ds.forward_returns_.push_back(std::move(v));
    }
  }
  {
    const auto mod_meta = manifest.at("arrays").at("modalities");
    ds.modalities_.assign(D, {});
    for (const auto& mm : mod_meta) {
      const std::string file = mm.at("file");
      const int cols = mm.at("shape").at(2);
      auto flat = io::read_f32(dir / file);
      if (static_cast<long long>(flat.size()) != 1LL * D * T * cols)
        throw std::runtime_error(file + " size mismatch");
      std::size_t k = 0;
      for (int t = 0; t < D; ++t) {
        Eigen::MatrixXd m(T, cols);
        for (int u = 0; u < T; ++u)
          for (int j = 0; j < cols; ++j) m(u, j) = flat[k++];
        ds.modalities_[t].push_back(std::move(m));
      }
    }
  }
  {
    auto flat = io::read_f32(dir / "market_scalars.f32");
    if (static_cast<long long>(flat.size()) != 2LL * D)
      throw std::runtime_error("market_scalars.f32 size mismatch");
    for (int t = 0; t < D; ++t) {
      ds.mean_forward_return_.push_back(flat[2 * t]);
      ds.realized_vol_.push_back(flat[2 * t + 1]);
    }
  }
  ds.truth.factor_loadings =
      io::read_mat_f32(dir / "factor_loadings.f32", ds.config.n_regimes, C);
  {
    auto labels = io::read_i32(dir / "regime_labels.i32");
    ds.truth.regime_labels.assign(labels.begin(), labels.end());
  }
  return ds;
}

}  // namespace hirevae
