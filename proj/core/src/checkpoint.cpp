#include "hirevae/checkpoint.hpp"

#include "hirevae/io.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace hirevae {

namespace {

using json = nlohmann::json;

json train_config_to_json(const TrainConfig& c) {
  return json{{"variant", c.variant},
              {"learning_rate", c.learning_rate},
              {"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"n_regimes", c.n_regimes},
              {"beta", c.beta},
              {"lambda_rec", c.lambda_rec},
              {"lambda_hier", c.lambda_hier},
              {"lambda_reg", c.lambda_reg},
              {"lambda_score", c.lambda_score},
              {"seed", c.seed},
              {"score_fit", c.score_fit},
              {"regime_on_fused", c.regime_on_fused},
              {"freeze_regimes", c.freeze_regimes},
              {"reset_state_each_epoch", c.reset_state_each_epoch},
              {"stock_hidden", c.stock_hidden},
              {"market_mod_hidden", c.market_mod_hidden},
              {"pair_dim", c.pair_dim},
              {"market_fused", c.market_fused},
              {"market_latent", c.market_latent},
              {"stock_latent", c.stock_latent},
              {"head_trunk", c.head_trunk},
              {"decoder_hidden", c.decoder_hidden}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.variant = j.at("variant");
  c.learning_rate = j.at("learning_rate");
  c.epochs = j.at("epochs");
  c.batch_size = j.at("batch_size");
  c.n_regimes = j.at("n_regimes");
  c.beta = j.at("beta");
  c.lambda_rec = j.at("lambda_rec");
  c.lambda_hier = j.at("lambda_hier");
  c.lambda_reg = j.at("lambda_reg");
  c.lambda_score = j.at("lambda_score");
  c.seed = j.at("seed");
  c.score_fit = j.at("score_fit");
  c.regime_on_fused = j.at("regime_on_fused");
  c.freeze_regimes = j.at("freeze_regimes");
  c.reset_state_each_epoch = j.at("reset_state_each_epoch");
  c.stock_hidden = j.at("stock_hidden");
  c.market_mod_hidden = j.at("market_mod_hidden");
  c.pair_dim = j.at("pair_dim");
  c.market_fused = j.at("market_fused");
  c.market_latent = j.at("market_latent");
  c.stock_latent = j.at("stock_latent");
  c.head_trunk = j.at("head_trunk");
  c.decoder_hidden = j.at("decoder_hidden");
  return c;
}

json model_config_to_json(const ModelConfig& m) {
  return json{{"n_features", m.n_features},
              {"seq_len", m.seq_len},
              {"modality_dims", m.modality_dims},
              {"stock_hidden", m.stock_hidden},
              {"market_mod_hidden", m.market_mod_hidden},
              {"pair_dim", m.pair_dim},
              {"market_fused", m.market_fused},
              {"market_latent", m.market_latent},
              {"stock_latent", m.stock_latent},
              {"head_trunk", m.head_trunk},
              {"decoder_hidden", m.decoder_hidden},
              {"n_regimes", m.n_regimes},
              {"beta", m.beta},
              {"score_fit", m.score_fit},
              {"regime_on_fused", m.regime_on_fused},
              {"variant", m.variant.tag}};
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig m;
  m.n_features = j.at("n_features");
  m.seq_len = j.at("seq_len");
  m.modality_dims = j.at("modality_dims").get<std::vector<int>>();
  m.stock_hidden = j.at("stock_hidden");
  m.market_mod_hidden = j.at("market_mod_hidden");
  m.pair_dim = j.at("pair_dim");
  m.market_fused = j.at("market_fused");
  m.market_latent = j.at("market_latent");
  m.stock_latent = j.at("stock_latent");
  m.head_trunk = j.at("head_trunk");
  m.decoder_hidden = j.at("decoder_hidden");
  m.n_regimes = j.at("n_regimes");
  m.beta = j.at("beta");
  m.score_fit = j.at("score_fit");
  m.regime_on_fused = j.at("regime_on_fused");
  m.variant = variant_from_tag(j.at("variant"));
  return m;
}

json regime_state_to_json(const RegimeState& s) {
  std::vector<double> mu(s.mu_r.data(), s.mu_r.data() + s.mu_r.size());
  std::vector<double> sigma(s.sigma_r.data(), s.sigma_r.data() + s.sigma_r.size());
  return json{{"mu_r", mu}, {"sigma_r", sigma}, {"beta", s.beta}, {"initialized", s.initialized}};
}

RegimeState regime_state_from_json(const json& j) {
  RegimeState s;
  const auto mu = j.at("mu_r").get<std::vector<double>>();
  const auto sigma = j.at("sigma_r").get<std::vector<double>>();
  s.mu_r = Eigen::Map<const Eigen::VectorXd>(mu.data(), static_cast<Eigen::Index>(mu.size()));
  s.sigma_r =
      Eigen::Map<const Eigen::VectorXd>(sigma.data(), static_cast<Eigen::Index>(sigma.size()));
  s.beta = j.at("beta");
  s.initialized = j.at("initialized");
  return s;
}

json vol_state_to_json(const VolRegimeState& s) {
  const bool has_data = std::isfinite(s.sigma_min);
  json j{{"n_regimes", s.n_regimes}, {"has_data", has_data}};
  if (has_data) {
    j["sigma_min"] = s.sigma_min;
    j["sigma_max"] = s.sigma_max;
  }
  return j;
}

VolRegimeState vol_state_from_json(const json& j) {
  VolRegimeState s;
  s.n_regimes = j.at("n_regimes");
  if (j.at("has_data").get<bool>()) {
    s.sigma_min = j.at("sigma_min");
    s.sigma_max = j.at("sigma_max");
  }
  return s;
}

}  // namespace

void Checkpoint::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir / "params");
  json index = json::array();
  for (const auto& [path, value] : params) {
    const std::string file = "params/" + path + ".f32";
    io::write_mat_f32(dir / file, value);
    index.push_back(json{{"path", path},
                         {"rows", value.rows()},
                         {"cols", value.cols()},
                         {"file", file}});
  }
  json j{{"format", "hirevae-checkpoint-v1"},
         {"train_config", train_config_to_json(train_config)},
         {"model_config", model_config_to_json(model_config)},
         {"regime_state", regime_state_to_json(regime_state)},
         {"vol_state", vol_state_to_json(vol_state)},
         {"loss_history", loss_history},
         {"val_rank_ic_history", val_rank_ic_history},
         {"trained", trained},
         {"best_epoch", best_epoch},
         {"params", index}};
  io::write_text(dir / "checkpoint.json", j.dump(2) + "\n");
}

Checkpoint Checkpoint::load(const std::filesystem::path& dir) {
  const json j = json::parse(io::read_text(dir / "checkpoint.json"));
  if (j.at("format") != "hirevae-checkpoint-v1")
    throw std::runtime_error("unrecognized checkpoint format in " + dir.string());
  Checkpoint ckpt;
  ckpt.train_config = train_config_from_json(j.at("train_config"));
  ckpt.model_config = model_config_from_json(j.at("model_config"));
  ckpt.regime_state = regime_state_from_json(j.at("regime_state"));
  ckpt.vol_state = vol_state_from_json(j.at("vol_state"));
  ckpt.loss_history = j.at("loss_history").get<std::vector<double>>();
  ckpt.val_rank_ic_history = j.at("val_rank_ic_history").get<std::vector<double>>();
  ckpt.trained = j.at("trained");
  ckpt.best_epoch = j.at("best_epoch");
  for (const auto& e : j.at("params")) {
    const std::string path = e.at("path");
    const Eigen::Index rows = e.at("rows");
    const Eigen::Index cols = e.at("cols");
    ckpt.params.emplace_back(path,
                             io::read_mat_f32(dir / e.at("file").get<std::string>(), rows, cols));
  }
  return ckpt;
}

std::unique_ptr<Model> Checkpoint::build_model() const {
  auto model = std::make_unique<Model>(model_config, train_config.seed);
  if (model->registry().all().size() != params.size())
    throw std::runtime_error("checkpoint: parameter count does not match the model layout");
  for (const auto& [path, value] : params) {
    Parameter* p = model->registry().find(path);
    if (!p) throw std::runtime_error("checkpoint: unknown parameter path " + path);
    if (p->value.rows() != value.rows() || p->value.cols() != value.cols())
      throw std::runtime_error("checkpoint: shape mismatch for " + path);
    p->value = value;
  }
  return model;
}

}  // namespace hirevae
