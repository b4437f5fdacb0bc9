#pragma once

#include <memory>
#include <string>
#include <vector>

#include "fashioncut/checkpoint.hpp"
#include "fashioncut/config.hpp"
#include "fashioncut/dataset.hpp"
#include "fashioncut/joint.hpp"

namespace fashioncut {

inline constexpr const char* kMetricsHeader =
    "step,epoch,loss_total,loss_gan,loss_cls,loss_ncex,loss_ncey,loss_disc,pseudo_accept_rate";
inline constexpr const char* kCheckpointFormat = "fashioncut-ckpt-1";

struct MetricsRow {
  int64_t step = 0;
  int epoch = 0;
  double loss_total = 0, loss_gan = 0, loss_cls = 0, loss_ncex = 0, loss_ncey = 0, loss_disc = 0;
  double pseudo_accept_rate = 0;
};

std::vector<MetricsRow> parse_metrics_csv(const std::string& path);

// Everything a training run mutates. ParamStores inside the optimizers point
// into the model, so the state lives on the heap and is never moved.
struct TrainState {
  TrainConfig config;
  std::unique_ptr<JointModel<float>> model;
  std::unique_ptr<nn::Adam<float>> opt_gen;   // generator + projector + classifier
  std::unique_ptr<nn::Adam<float>> opt_disc;  // discriminator
  int epoch = 0;  // completed epochs
  int64_t global_step = 0;

  static TrainState fresh(const TrainConfig& cfg);
};

// Pseudo-label half-batch composition for one step. Predicts labels with the
// current classifier when the policy is active; shortfall from the
// confidence filter is backfilled with synthetic rows.
struct ComposeStats {
  int64_t requested = 0;  // pseudo quota for the step
  int64_t accepted = 0;
  double accept_rate() const { return requested == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(requested); }
};
ComposedClassifierBatch<float> compose_classifier_batch(
    const std::vector<int>& synth_labels, const UnlabeledData& real_pool, TrainState& state,
    const PseudoLabelPolicy& policy, uint64_t step_seed, ComposeStats* stats);

// One optimizer update of generator+projector+classifier under the combined
// objective; discriminator frozen.
LossBreakdown generator_step(TrainState& state, const Tensor<float>& synthetic,
                             const std::vector<int>& synth_labels, const Tensor<float>& real,
                             const ComposedClassifierBatch<float>& cls_batch,
                             uint64_t patch_seed);

// One optimizer update of the discriminator; generator frozen, fakes detached.
double discriminator_step(TrainState& state, const Tensor<float>& synthetic,
                          const Tensor<float>& real);

struct TrainOutputs {
  std::vector<MetricsRow> metrics;
  std::string final_checkpoint;
  std::string metrics_csv;
};

// The full joint loop: per mini-batch one discriminator step then one
// generator step, pseudo-label mixing from epoch enable_epoch+1 on, one
// checkpoint per epoch plus a `latest` alias, step-level metrics CSV.
TrainOutputs run_training(const TrainConfig& cfg, const LabeledData& source,
                          const UnlabeledData& target, const std::string& out_dir,
                          const std::string& resume_checkpoint = "");

TrainOutputs run_training_from_manifests(const TrainConfig& cfg, const std::string& out_dir,
                                         const std::string& resume_checkpoint = "");

// Classifier-only loop (the no-adaptation baseline, and the second stage of
// translation-then-classify). When translator_checkpoint is set, batches are
// passed through that frozen generator first. Writes the same artifacts.
TrainOutputs run_classifier_training(const TrainConfig& cfg, const LabeledData& source,
                                     const std::string& out_dir,
                                     const std::string& translator_checkpoint = "");

// --- checkpointing --------------------------------------------------------

void save_checkpoint(const TrainState& state, const std::string& path);

// Rebuilds model + optimizers from an archive; config comes from the file.
TrainState load_checkpoint(const std::string& path);

// Model-only load for eval/preview tools.
struct LoadedModel {
  TrainConfig config;
  std::unique_ptr<JointModel<float>> model;
};
LoadedModel load_model(const std::string& checkpoint_path);

}  // namespace fashioncut
