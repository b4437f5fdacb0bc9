#pragma once

#include <cstdint>
#include <string>

#include "fashioncut/pattern.hpp"

namespace fashioncut {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Weights of the combined generator objective plus the InfoNCE temperature.
struct LossWeights {
  double lambda_g = 0.1;
  double lambda_c = 0.1;
  double lambda_ncex = 1.0;
  double lambda_ncey = 1.0;
  double temperature = 0.07;

  void validate() const;
};

// enable_epoch is the last fully-synthetic epoch; mixing starts with the
// first batch of epoch enable_epoch+1.
struct PseudoLabelPolicy {
  int enable_epoch = 2;
  double mix_fraction = 0.5;
  double confidence_threshold = 0.0;

  void validate() const;
  bool active_in_epoch(int epoch) const { return epoch > enable_epoch && mix_fraction > 0.0; }
};

struct OptimizerConfig {
  std::string type = "adam";
  double beta1 = 0.5;
  double beta2 = 0.999;

  void validate() const;
};

// Network width/depth knobs. Defaults are the desk-scale configuration; the
// full-scale choices stay expressible by raising them.
struct ModelConfig {
  int gen_channels = 16;
  int gen_res_blocks = 4;
  int disc_channels = 16;
  int cls_channels = 16;
  int cls_blocks_per_stage = 1;
  int embed_dim = 64;
  int proj_hidden = 64;
  int num_patches = 64;

  void validate() const;
};

struct TrainConfig {
  int epochs = 5;
  int batch_size = 16;
  double learning_rate = 1e-5;
  OptimizerConfig optimizer;
  int image_size = 64;
  uint64_t seed = 1;
  LossWeights loss_weights;
  PseudoLabelPolicy pseudo_policy;
  std::string source_manifest;
  std::string target_manifest;
  ModelConfig model;

  void validate() const;
};

// Strict parse: any unknown key (at any nesting level) raises ConfigError
// naming the key. Missing keys take their defaults.
TrainConfig parse_train_config_json(const std::string& json_text);
TrainConfig load_train_config(const std::string& path);
std::string train_config_to_json(const TrainConfig& cfg);

}  // namespace fashioncut
