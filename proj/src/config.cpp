#include "fashioncut/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "json.hpp"

using nlohmann::json;

namespace fashioncut {

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& scope) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key()))
      throw ConfigError("unknown config key: " + (scope.empty() ? it.key() : scope + "." + it.key()));
  }
}

template <class T>
void read(const json& j, const char* key, T* out) {
  if (j.contains(key)) *out = j.at(key).get<T>();
}

}  // namespace

void LossWeights::validate() const {
  auto ok = [](double v) { return std::isfinite(v) && v >= 0.0; };
  if (!ok(lambda_g) || !ok(lambda_c) || !ok(lambda_ncex) || !ok(lambda_ncey))
    throw ConfigError("loss weights must be finite and non-negative");
  if (!(temperature > 0.0) || !std::isfinite(temperature))
    throw ConfigError("temperature must be > 0");
}

void PseudoLabelPolicy::validate() const {
  if (enable_epoch < 1) throw ConfigError("pseudo_policy.enable_epoch must be >= 1");
  if (mix_fraction < 0.0 || mix_fraction > 1.0)
    throw ConfigError("pseudo_policy.mix_fraction must be in [0,1]");
  if (confidence_threshold < 0.0 || confidence_threshold > 1.0)
    throw ConfigError("pseudo_policy.confidence_threshold must be in [0,1]");
}

void OptimizerConfig::validate() const {
  if (type != "adam") throw ConfigError("optimizer.type must be \"adam\"");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
    throw ConfigError("optimizer betas must lie in [0,1)");
}

void ModelConfig::validate() const {
  if (gen_channels < 2 || disc_channels < 2 || cls_channels < 2)
    throw ConfigError("model channel counts must be >= 2");
  if (gen_res_blocks < 1) throw ConfigError("model.gen_res_blocks must be >= 1");
  if (cls_blocks_per_stage < 1) throw ConfigError("model.cls_blocks_per_stage must be >= 1");
  if (embed_dim < 2 || proj_hidden < 2) throw ConfigError("model embedding dims must be >= 2");
  if (num_patches < 2) throw ConfigError("model.num_patches must be >= 2 (InfoNCE needs negatives)");
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 2) throw ConfigError("batch_size must be >= 2");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (image_size < 16) throw ConfigError("image_size must be >= 16");
  if (image_size % 4 != 0) throw ConfigError("image_size must be divisible by 4");
  optimizer.validate();
  loss_weights.validate();
  pseudo_policy.validate();
  model.validate();
  const bool pseudo_used = epochs > pseudo_policy.enable_epoch && pseudo_policy.mix_fraction > 0.0;
  if (pseudo_used && batch_size % 2 != 0)
    throw ConfigError("batch_size must be even when pseudo-label mixing is active");
  const int deepest = image_size / 4;
  if (model.num_patches > deepest * deepest)
    throw ConfigError("model.num_patches exceeds the deepest tap grid (" +
                      std::to_string(deepest * deepest) + " cells)");
}

TrainConfig parse_train_config_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");

  reject_unknown(j, {"epochs", "batch_size", "learning_rate", "optimizer", "image_size", "seed",
                     "loss_weights", "pseudo_policy", "source_manifest", "target_manifest",
                     "model"},
                 "");

  TrainConfig cfg;
  read(j, "epochs", &cfg.epochs);
  read(j, "batch_size", &cfg.batch_size);
  read(j, "learning_rate", &cfg.learning_rate);
  read(j, "image_size", &cfg.image_size);
  read(j, "seed", &cfg.seed);
  read(j, "source_manifest", &cfg.source_manifest);
  read(j, "target_manifest", &cfg.target_manifest);

  if (j.contains("optimizer")) {
    const json& o = j.at("optimizer");
    if (!o.is_object()) throw ConfigError("optimizer must be an object");
    reject_unknown(o, {"type", "beta1", "beta2"}, "optimizer");
    read(o, "type", &cfg.optimizer.type);
    read(o, "beta1", &cfg.optimizer.beta1);
    read(o, "beta2", &cfg.optimizer.beta2);
  }
  if (j.contains("loss_weights")) {
    const json& o = j.at("loss_weights");
    if (!o.is_object()) throw ConfigError("loss_weights must be an object");
    reject_unknown(o, {"lambda_g", "lambda_c", "lambda_ncex", "lambda_ncey", "temperature"},
                   "loss_weights");
    read(o, "lambda_g", &cfg.loss_weights.lambda_g);
    read(o, "lambda_c", &cfg.loss_weights.lambda_c);
    read(o, "lambda_ncex", &cfg.loss_weights.lambda_ncex);
    read(o, "lambda_ncey", &cfg.loss_weights.lambda_ncey);
    read(o, "temperature", &cfg.loss_weights.temperature);
  }
  if (j.contains("pseudo_policy")) {
    const json& o = j.at("pseudo_policy");
    if (!o.is_object()) throw ConfigError("pseudo_policy must be an object");
    reject_unknown(o, {"enable_epoch", "mix_fraction", "confidence_threshold"}, "pseudo_policy");
    read(o, "enable_epoch", &cfg.pseudo_policy.enable_epoch);
    read(o, "mix_fraction", &cfg.pseudo_policy.mix_fraction);
    read(o, "confidence_threshold", &cfg.pseudo_policy.confidence_threshold);
  }
  if (j.contains("model")) {
    const json& o = j.at("model");
    if (!o.is_object()) throw ConfigError("model must be an object");
    reject_unknown(o,
                   {"gen_channels", "gen_res_blocks", "disc_channels", "cls_channels",
                    "cls_blocks_per_stage", "embed_dim", "proj_hidden", "num_patches"},
                   "model");
    read(o, "gen_channels", &cfg.model.gen_channels);
    read(o, "gen_res_blocks", &cfg.model.gen_res_blocks);
    read(o, "disc_channels", &cfg.model.disc_channels);
    read(o, "cls_channels", &cfg.model.cls_channels);
    read(o, "cls_blocks_per_stage", &cfg.model.cls_blocks_per_stage);
    read(o, "embed_dim", &cfg.model.embed_dim);
    read(o, "proj_hidden", &cfg.model.proj_hidden);
    read(o, "num_patches", &cfg.model.num_patches);
  }

  cfg.validate();
  return cfg;
}

TrainConfig load_train_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return parse_train_config_json(text);
}

std::string train_config_to_json(const TrainConfig& cfg) {
  json j;
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  j["learning_rate"] = cfg.learning_rate;
  j["optimizer"] = {{"type", cfg.optimizer.type},
                    {"beta1", cfg.optimizer.beta1},
                    {"beta2", cfg.optimizer.beta2}};
  j["image_size"] = cfg.image_size;
  j["seed"] = cfg.seed;
  j["loss_weights"] = {{"lambda_g", cfg.loss_weights.lambda_g},
                       {"lambda_c", cfg.loss_weights.lambda_c},
                       {"lambda_ncex", cfg.loss_weights.lambda_ncex},
                       {"lambda_ncey", cfg.loss_weights.lambda_ncey},
                       {"temperature", cfg.loss_weights.temperature}};
  j["pseudo_policy"] = {{"enable_epoch", cfg.pseudo_policy.enable_epoch},
                        {"mix_fraction", cfg.pseudo_policy.mix_fraction},
                        {"confidence_threshold", cfg.pseudo_policy.confidence_threshold}};
  j["source_manifest"] = cfg.source_manifest;
  j["target_manifest"] = cfg.target_manifest;
  j["model"] = {{"gen_channels", cfg.model.gen_channels},
                {"gen_res_blocks", cfg.model.gen_res_blocks},
                {"disc_channels", cfg.model.disc_channels},
                {"cls_channels", cfg.model.cls_channels},
                {"cls_blocks_per_stage", cfg.model.cls_blocks_per_stage},
                {"embed_dim", cfg.model.embed_dim},
                {"proj_hidden", cfg.model.proj_hidden},
                {"num_patches", cfg.model.num_patches}};
  return j.dump(2);
}

}  // namespace fashioncut
