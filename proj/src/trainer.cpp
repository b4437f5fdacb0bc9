#include "fashioncut/trainer.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace fashioncut {

std::string train_config_to_json_model_only(const ModelConfig& m);

namespace {

enum : uint64_t {
  kStreamShuffle = 0x5f1e,
  kStreamRealBatch = 0x6ea1,
  kStreamPseudo = 0x9b5d,
  kStreamPatches = 0x9a7c,
};

std::vector<int> shuffled_indices(size_t n, uint64_t seed) {
  std::vector<int> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = static_cast<int>(i);
  Rng rng(seed);
  for (size_t i = 0; i + 1 < n; ++i) {
    size_t j = i + static_cast<size_t>(rng.next_below(n - i));
    std::swap(idx[i], idx[j]);
  }
  return idx;
}

std::vector<int> sample_distinct(size_t pool, size_t k, uint64_t seed) {
  if (k > pool) throw DataError("sample: pool smaller than requested batch");
  std::vector<int> idx(pool);
  for (size_t i = 0; i < pool; ++i) idx[i] = static_cast<int>(i);
  Rng rng(seed);
  std::vector<int> out(k);
  for (size_t i = 0; i < k; ++i) {
    size_t j = i + static_cast<size_t>(rng.next_below(pool - i));
    std::swap(idx[i], idx[j]);
    out[i] = idx[i];
  }
  return out;
}

Tensor<float> batch_from_images(const std::vector<ImageU8>& images, const std::vector<int>& rows) {
  if (rows.empty()) return Tensor<float>();
  const int64_t H = images[static_cast<size_t>(rows[0])].height;
  const int64_t W = images[static_cast<size_t>(rows[0])].width;
  Tensor<float> out({static_cast<int64_t>(rows.size()), H, W, 3});
  for (size_t i = 0; i < rows.size(); ++i)
    image_into_batch(images[static_cast<size_t>(rows[i])], out, static_cast<int64_t>(i));
  return out;
}

void append_metrics(std::ofstream& f, const MetricsRow& r) {
  char buf[320];
  std::snprintf(buf, sizeof(buf), "%" PRId64 ",%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", r.step,
                r.epoch, r.loss_total, r.loss_gan, r.loss_cls, r.loss_ncex, r.loss_ncey,
                r.loss_disc, r.pseudo_accept_rate);
  f << buf;
}

void write_checkpoint_pair(const TrainState& state, const std::string& out_dir, int epoch) {
  fs::create_directories(out_dir);
  std::string path = (fs::path(out_dir) / ("epoch_" + std::to_string(epoch) + ".ckpt")).string();
  save_checkpoint(state, path);
  save_checkpoint(state, (fs::path(out_dir) / "latest").string());
}

double adam_lr(const TrainConfig& cfg) { return cfg.learning_rate; }

}  // namespace

std::vector<MetricsRow> parse_metrics_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open metrics log: " + path);
  std::string line;
  if (!std::getline(f, line) || line != kMetricsHeader)
    throw DataError("metrics log header mismatch in " + path);
  std::vector<MetricsRow> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    MetricsRow r;
    std::stringstream ss(line);
    char comma;
    ss >> r.step >> comma >> r.epoch >> comma >> r.loss_total >> comma >> r.loss_gan >> comma >>
        r.loss_cls >> comma >> r.loss_ncex >> comma >> r.loss_ncey >> comma >> r.loss_disc >>
        comma >> r.pseudo_accept_rate;
    rows.push_back(r);
  }
  return rows;
}

TrainState TrainState::fresh(const TrainConfig& cfg) {
  cfg.validate();
  TrainState st;
  st.config = cfg;
  st.model = std::make_unique<JointModel<float>>(cfg.model, cfg.seed);
  st.opt_gen = std::make_unique<nn::Adam<float>>(st.model->generator_group(), adam_lr(cfg),
                                                 cfg.optimizer.beta1, cfg.optimizer.beta2);
  st.opt_disc = std::make_unique<nn::Adam<float>>(st.model->discriminator_group(), adam_lr(cfg),
                                                  cfg.optimizer.beta1, cfg.optimizer.beta2);
  return st;
}

ComposedClassifierBatch<float> compose_classifier_batch(
    const std::vector<int>& synth_labels, const UnlabeledData& real_pool, TrainState& state,
    const PseudoLabelPolicy& policy, uint64_t step_seed, ComposeStats* stats) {
  const int B = static_cast<int>(synth_labels.size());
  ComposedClassifierBatch<float> out;
  const int running_epoch = state.epoch + 1;  // epoch being trained, 1-based

  if (!policy.active_in_epoch(running_epoch)) {
    out.synth_rows.resize(static_cast<size_t>(B));
    for (int i = 0; i < B; ++i) out.synth_rows[static_cast<size_t>(i)] = i;
    out.synth_labels = synth_labels;
    if (stats) *stats = ComposeStats{};
    return out;
  }

  const int quota = static_cast<int>(std::ceil(policy.mix_fraction * B));
  if (static_cast<size_t>(quota) > real_pool.size())
    throw DataError("real pool too small for pseudo-label quota (" + std::to_string(quota) +
                    " needed, " + std::to_string(real_pool.size()) + " available)");

  // predict pseudo-labels for the sampled candidates with the current classifier
  std::vector<int> cand = sample_distinct(real_pool.size(), static_cast<size_t>(quota),
                                          hash_combine(step_seed, kStreamPseudo));
  Tensor<float> cand_images = batch_from_images(real_pool.images, cand);
  Prediction<float> pred = predict(state.model->classifier, cand_images);
  auto accepted = pseudo_label(pred, static_cast<float>(policy.confidence_threshold));

  const int64_t H = cand_images.dim(1), W = cand_images.dim(2);
  out.real_images = Tensor<float>({static_cast<int64_t>(accepted.size()), H, W, 3});
  for (size_t i = 0; i < accepted.size(); ++i) {
    const float* src = cand_images.pixel(accepted[i].first, 0, 0);
    std::copy(src, src + H * W * 3, out.real_images.pixel(static_cast<int64_t>(i), 0, 0));
    out.real_labels.push_back(accepted[i].second);
  }

  // synthetic rows: the kept half plus backfill for any confidence shortfall
  const int keep = B - quota;
  const int shortfall = quota - static_cast<int>(accepted.size());
  for (int i = 0; i < keep + shortfall; ++i) {
    out.synth_rows.push_back(i);
    out.synth_labels.push_back(synth_labels[static_cast<size_t>(i)]);
  }
  if (stats) {
    stats->requested = quota;
    stats->accepted = static_cast<int64_t>(accepted.size());
  }
  return out;
}

LossBreakdown generator_step(TrainState& state, const Tensor<float>& synthetic,
                             const std::vector<int>& synth_labels, const Tensor<float>& real,
                             const ComposedClassifierBatch<float>& cls_batch,
                             uint64_t patch_seed) {
  (void)synth_labels;
  state.opt_gen->zero_grad();
  LossBreakdown b = state.model->generator_objective(synthetic, real, cls_batch,
                                                     state.config.loss_weights, patch_seed, true);
  state.opt_gen->step();
  return b;
}

double discriminator_step(TrainState& state, const Tensor<float>& synthetic,
                          const Tensor<float>& real) {
  state.opt_disc->zero_grad();
  float v = state.model->discriminator_objective(synthetic, real, true);
  state.opt_disc->step();
  return static_cast<double>(v);
}

TrainOutputs run_training(const TrainConfig& cfg, const LabeledData& source,
                          const UnlabeledData& target, const std::string& out_dir,
                          const std::string& resume_checkpoint) {
  cfg.validate();
  if (source.image_size != cfg.image_size)
    throw ConfigError("source dataset image size " + std::to_string(source.image_size) +
                      " does not match config image_size " + std::to_string(cfg.image_size));
  if (target.image_size != cfg.image_size)
    throw ConfigError("target dataset image size " + std::to_string(target.image_size) +
                      " does not match config image_size " + std::to_string(cfg.image_size));
  const int B = cfg.batch_size;
  if (source.size() < static_cast<size_t>(B))
    throw DataError("source dataset smaller than one batch");
  if (target.size() < static_cast<size_t>(B))
    throw DataError("target dataset smaller than one batch");

  TrainState state = resume_checkpoint.empty() ? TrainState::fresh(cfg)
                                               : load_checkpoint(resume_checkpoint);
  if (!resume_checkpoint.empty()) {
    // every knob except the horizon must match for a bit-exact continuation
    TrainConfig stored = state.config;
    TrainConfig want = cfg;
    stored.epochs = want.epochs;
    if (train_config_to_json(stored) != train_config_to_json(want))
      throw ConfigError("resume config differs from checkpoint config (only 'epochs' may change)");
    state.config = cfg;
  }

  fs::create_directories(out_dir);
  std::string metrics_path = (fs::path(out_dir) / "metrics.csv").string();
  const bool append = !resume_checkpoint.empty() && fs::exists(metrics_path);
  std::ofstream metrics(metrics_path, append ? std::ios::app : std::ios::trunc);
  if (!metrics) throw DataError("cannot open metrics log for writing: " + metrics_path);
  if (!append) metrics << kMetricsHeader << "\n";

  TrainOutputs out;
  out.metrics_csv = metrics_path;

  const int steps_per_epoch = static_cast<int>(source.size()) / B;
  for (int epoch = state.epoch + 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<int> order =
        shuffled_indices(source.size(), hash_combine(hash_combine(cfg.seed, kStreamShuffle),
                                                     static_cast<uint64_t>(epoch)));
    for (int step = 0; step < steps_per_epoch; ++step) {
      uint64_t step_key = hash_combine(hash_combine(cfg.seed, static_cast<uint64_t>(epoch)),
                                       static_cast<uint64_t>(step));
      std::vector<int> synth_rows(order.begin() + static_cast<long>(step) * B,
                                  order.begin() + static_cast<long>(step + 1) * B);
      std::vector<int> synth_labels(static_cast<size_t>(B));
      for (int i = 0; i < B; ++i)
        synth_labels[static_cast<size_t>(i)] = source.labels[static_cast<size_t>(synth_rows[static_cast<size_t>(i)])];
      Tensor<float> synth = batch_from_images(source.images, synth_rows);

      std::vector<int> real_rows = sample_distinct(target.size(), static_cast<size_t>(B),
                                                   hash_combine(step_key, kStreamRealBatch));
      Tensor<float> real = batch_from_images(target.images, real_rows);

      MetricsRow row;
      row.loss_disc = discriminator_step(state, synth, real);

      ComposeStats stats;
      ComposedClassifierBatch<float> cls_batch = compose_classifier_batch(
          synth_labels, target, state, cfg.pseudo_policy, step_key, &stats);

      LossBreakdown b = generator_step(state, synth, synth_labels, real, cls_batch,
                                       hash_combine(step_key, kStreamPatches));
      ++state.global_step;
      row.step = state.global_step;
      row.epoch = epoch;
      row.loss_total = b.total;
      row.loss_gan = b.gan;
      row.loss_cls = b.cls;
      row.loss_ncex = b.ncex;
      row.loss_ncey = b.ncey;
      row.pseudo_accept_rate = stats.accept_rate();
      append_metrics(metrics, row);
      out.metrics.push_back(row);
    }
    state.epoch = epoch;
    write_checkpoint_pair(state, out_dir, epoch);
  }
  metrics.flush();
  out.final_checkpoint =
      (fs::path(out_dir) / ("epoch_" + std::to_string(state.epoch) + ".ckpt")).string();
  return out;
}

TrainOutputs run_training_from_manifests(const TrainConfig& cfg, const std::string& out_dir,
                                         const std::string& resume_checkpoint) {
  if (cfg.source_manifest.empty() || cfg.target_manifest.empty())
    throw ConfigError("source_manifest and target_manifest must be set");
  LabeledData source = LabeledData::load(load_manifest(cfg.source_manifest));
  UnlabeledData target = UnlabeledData::load_from_csv(cfg.target_manifest);
  return run_training(cfg, source, target, out_dir, resume_checkpoint);
}

TrainOutputs run_classifier_training(const TrainConfig& cfg, const LabeledData& source,
                                     const std::string& out_dir,
                                     const std::string& translator_checkpoint) {
  cfg.validate();
  if (source.image_size != cfg.image_size)
    throw ConfigError("source dataset image size does not match config image_size");
  const int B = cfg.batch_size;
  if (source.size() < static_cast<size_t>(B))
    throw DataError("source dataset smaller than one batch");

  TrainState state = TrainState::fresh(cfg);
  if (!translator_checkpoint.empty()) {
    LoadedModel lm = load_model(translator_checkpoint);
    if (train_config_to_json_model_only(lm.config.model) !=
        train_config_to_json_model_only(cfg.model))
      throw ConfigError("translator checkpoint model shape differs from config");
    state.model = std::move(lm.model);
    state.opt_gen = std::make_unique<nn::Adam<float>>(state.model->generator_group(), cfg.learning_rate,
                                                      cfg.optimizer.beta1, cfg.optimizer.beta2);
    state.opt_disc = std::make_unique<nn::Adam<float>>(state.model->discriminator_group(),
                                                       cfg.learning_rate, cfg.optimizer.beta1,
                                                       cfg.optimizer.beta2);
  }

  nn::ParamStore<float> cls_params;
  state.model->classifier.register_params(cls_params, "cls");
  nn::Adam<float> opt(cls_params, cfg.learning_rate, cfg.optimizer.beta1, cfg.optimizer.beta2);

  fs::create_directories(out_dir);
  std::string metrics_path = (fs::path(out_dir) / "metrics.csv").string();
  std::ofstream metrics(metrics_path, std::ios::trunc);
  if (!metrics) throw DataError("cannot open metrics log for writing: " + metrics_path);
  metrics << kMetricsHeader << "\n";

  TrainOutputs out;
  out.metrics_csv = metrics_path;
  const int steps_per_epoch = static_cast<int>(source.size()) / B;
  const bool translate_inputs = !translator_checkpoint.empty();

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<int> order =
        shuffled_indices(source.size(), hash_combine(hash_combine(cfg.seed, kStreamShuffle),
                                                     static_cast<uint64_t>(epoch)));
    for (int step = 0; step < steps_per_epoch; ++step) {
      std::vector<int> rows(order.begin() + static_cast<long>(step) * B,
                            order.begin() + static_cast<long>(step + 1) * B);
      std::vector<int> labels(static_cast<size_t>(B));
      for (int i = 0; i < B; ++i)
        labels[static_cast<size_t>(i)] = source.labels[static_cast<size_t>(rows[static_cast<size_t>(i)])];
      Tensor<float> images = batch_from_images(source.images, rows);
      if (translate_inputs) images = state.model->generator.translate(images, nullptr);

      opt.zero_grad();
      typename ClassifierNet<float>::Cache cache;
      Tensor<float> logits = state.model->classifier.forward(images, &cache);
      XentGrad<float> xg = xent_loss_grad(logits, labels);
      if (!std::isfinite(static_cast<double>(xg.value)))
        throw TrainingError("non-finite loss in term: cls");
      state.model->classifier.backward(cache, xg.dlogits);
      opt.step();

      ++state.global_step;
      MetricsRow row;
      row.step = state.global_step;
      row.epoch = epoch;
      row.loss_cls = static_cast<double>(xg.value);
      row.loss_total = row.loss_cls;
      append_metrics(metrics, row);
      out.metrics.push_back(row);
    }
    state.epoch = epoch;
    write_checkpoint_pair(state, out_dir, epoch);
  }
  metrics.flush();
  out.final_checkpoint =
      (fs::path(out_dir) / ("epoch_" + std::to_string(state.epoch) + ".ckpt")).string();
  return out;
}

// --- checkpoint I/O ---------------------------------------------------------

namespace {

void put_params(ArrayArchive& a, nn::ParamStore<float>& params, const std::string& prefix) {
  for (auto& p : params) a.put_tensor(prefix + p.name, *p.value);
}

void put_adam(ArrayArchive& a, nn::Adam<float>& opt, const std::string& prefix) {
  const auto& params = opt.params();
  for (size_t k = 0; k < params.size(); ++k) {
    a.put_tensor(prefix + ".m." + params[k].name, opt.moment1(k));
    a.put_tensor(prefix + ".v." + params[k].name, opt.moment2(k));
  }
  a.put_scalar_i64(prefix + ".t", opt.step_count());
}

void get_params(const ArrayArchive& a, nn::ParamStore<float>& params, const std::string& prefix) {
  for (auto& p : params) {
    const Tensor<float>& t = a.tensor(prefix + p.name);
    if (t.shape() != p.value->shape())
      throw CheckpointError("checkpoint: shape mismatch for " + p.name);
    *p.value = t;
  }
}

void get_adam(const ArrayArchive& a, nn::Adam<float>& opt, const std::string& prefix) {
  const auto& params = opt.params();
  for (size_t k = 0; k < params.size(); ++k) {
    opt.moment1(k) = a.tensor(prefix + ".m." + params[k].name);
    opt.moment2(k) = a.tensor(prefix + ".v." + params[k].name);
  }
  opt.set_step_count(a.scalar_i64(prefix + ".t"));
}

}  // namespace

std::string train_config_to_json_model_only(const ModelConfig& m) {
  return std::to_string(m.gen_channels) + "/" + std::to_string(m.gen_res_blocks) + "/" +
         std::to_string(m.disc_channels) + "/" + std::to_string(m.cls_channels) + "/" +
         std::to_string(m.cls_blocks_per_stage) + "/" + std::to_string(m.embed_dim) + "/" +
         std::to_string(m.proj_hidden) + "/" + std::to_string(m.num_patches);
}

void save_checkpoint(const TrainState& state, const std::string& path) {
  ArrayArchive a;
  a.put_string("format", kCheckpointFormat);
  a.put_string("config", train_config_to_json(state.config));
  a.put_scalar_i64("epoch", state.epoch);
  a.put_scalar_i64("global_step", state.global_step);
  nn::ParamStore<float> params = state.model->all_params();
  put_params(a, params, "param.");
  put_adam(a, *state.opt_gen, "adam_gen");
  put_adam(a, *state.opt_disc, "adam_disc");
  a.save(path);
}

TrainState load_checkpoint(const std::string& path) {
  ArrayArchive a = ArrayArchive::load(path);
  if (a.string("format") != kCheckpointFormat)
    throw CheckpointError("unsupported checkpoint format in " + path);
  TrainConfig cfg = parse_train_config_json(a.string("config"));
  TrainState state = TrainState::fresh(cfg);
  nn::ParamStore<float> params = state.model->all_params();
  get_params(a, params, "param.");
  get_adam(a, *state.opt_gen, "adam_gen");
  get_adam(a, *state.opt_disc, "adam_disc");
  state.epoch = static_cast<int>(a.scalar_i64("epoch"));
  state.global_step = a.scalar_i64("global_step");
  return state;
}

LoadedModel load_model(const std::string& checkpoint_path) {
  ArrayArchive a = ArrayArchive::load(checkpoint_path);
  if (a.string("format") != kCheckpointFormat)
    throw CheckpointError("unsupported checkpoint format in " + checkpoint_path);
  LoadedModel lm;
  lm.config = parse_train_config_json(a.string("config"));
  lm.model = std::make_unique<JointModel<float>>(lm.config.model, lm.config.seed);
  nn::ParamStore<float> params = lm.model->all_params();
  get_params(a, params, "param.");
  return lm;
}

}  // namespace fashioncut
