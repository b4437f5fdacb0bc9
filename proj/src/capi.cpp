#include "fashioncut_c.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <sstream>
#include <string>

#include "fashioncut/harness.hpp"
#include "fashioncut/plot.hpp"
#include "fashioncut/trainer.hpp"
#include "json.hpp"

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

// Param-ish failures map to FC_ERR_PARAM, everything else to FC_ERR_RUNTIME.
template <class Fn>
fc_status guarded(Fn&& fn) {
  using namespace fashioncut;
  try {
    fn();
    g_last_error.clear();
    return FC_OK;
  } catch (const ParamError& e) {
    g_last_error = e.what();
    return FC_ERR_PARAM;
  } catch (const ConfigError& e) {
    g_last_error = e.what();
    return FC_ERR_PARAM;
  } catch (const std::invalid_argument& e) {
    g_last_error = e.what();
    return FC_ERR_PARAM;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return FC_ERR_RUNTIME;
  } catch (...) {
    g_last_error = "unknown error";
    return FC_ERR_RUNTIME;
  }
}

std::vector<uint64_t> parse_u64_csv(const char* csv) {
  std::vector<uint64_t> out;
  if (!csv) return out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::strtoull(item.c_str(), nullptr, 10));
  }
  return out;
}

}  // namespace

struct fc_report {
  std::string json_text;
};

extern "C" {

const char* fc_version(void) { return "fashioncut 1.0.0"; }

const char* fc_last_error(void) { return g_last_error.c_str(); }

void fc_string_free(char* s) { std::free(s); }

fc_status fc_generate_dataset(const char* out_dir, int per_class, const char* domain,
                              uint64_t seed, int image_size, char** out_manifest_path) {
  return guarded([&] {
    using namespace fashioncut;
    if (!out_dir || !domain) throw ParamError("out_dir and domain are required");
    DomainStyle style = domain_from_name(domain) == DomainStyle::Tag::kSource
                            ? DomainStyle::source()
                            : DomainStyle::target_default();
    DatasetManifest m = generate_dataset(per_class, style, out_dir, seed, image_size);
    if (out_manifest_path)
      *out_manifest_path =
          dup_string((std::filesystem::path(m.root_dir) / "manifest.csv").string());
  });
}

fc_status fc_train(const char* config_path, const char* out_dir, const char* resume_checkpoint,
                   char** out_summary_json) {
  return guarded([&] {
    using namespace fashioncut;
    if (!config_path || !out_dir) throw ParamError("config_path and out_dir are required");
    TrainConfig cfg = load_train_config(config_path);
    TrainOutputs out = run_training_from_manifests(cfg, out_dir,
                                                   resume_checkpoint ? resume_checkpoint : "");
    if (out_summary_json) {
      nlohmann::json j;
      if (!out.metrics.empty()) {
        const MetricsRow& last = out.metrics.back();
        j["final_step"] = last.step;
        j["final_epoch"] = last.epoch;
        j["loss_total"] = last.loss_total;
        j["loss_gan"] = last.loss_gan;
        j["loss_cls"] = last.loss_cls;
        j["loss_ncex"] = last.loss_ncex;
        j["loss_ncey"] = last.loss_ncey;
        j["loss_disc"] = last.loss_disc;
        j["pseudo_accept_rate"] = last.pseudo_accept_rate;
      }
      j["checkpoint"] = out.final_checkpoint;
      j["metrics_csv"] = out.metrics_csv;
      *out_summary_json = dup_string(j.dump(2));
    }
  });
}

fc_status fc_resolve_train_config(const char* config_path, char** out_json) {
  return guarded([&] {
    using namespace fashioncut;
    if (!config_path || !out_json) throw ParamError("config_path and out_json are required");
    *out_json = dup_string(train_config_to_json(load_train_config(config_path)));
  });
}

fc_status fc_evaluate(const char* checkpoint_path, const char* eval_manifest, fc_report** out) {
  return guarded([&] {
    using namespace fashioncut;
    if (!checkpoint_path || !eval_manifest || !out)
      throw ParamError("checkpoint_path, eval_manifest and out are required");
    EvalResult r = evaluate_checkpoint(checkpoint_path, eval_manifest);
    ExperimentReport rep;
    rep.results.push_back(r);
    *out = new fc_report{rep.to_json()};
  });
}

fc_status fc_compare(const char* config_path, const char* eval_manifest, const char* methods_csv,
                     const char* seeds_csv, const char* out_dir, int jobs, fc_report** out) {
  return guarded([&] {
    using namespace fashioncut;
    if (!config_path || !eval_manifest || !methods_csv || !seeds_csv || !out_dir)
      throw ParamError("config_path, eval_manifest, methods_csv, seeds_csv, out_dir required");
    TrainConfig cfg = load_train_config(config_path);
    std::vector<Method> methods;
    {
      std::stringstream ss(methods_csv);
      std::string item;
      while (std::getline(ss, item, ','))
        if (!item.empty()) methods.push_back(method_from_name(item));
    }
    std::vector<uint64_t> seeds = parse_u64_csv(seeds_csv);
    ExperimentReport rep = compare_methods(cfg, eval_manifest, methods, seeds, out_dir,
                                           jobs < 1 ? 1 : jobs);
    emit_report(rep, out_dir);
    if (out) *out = new fc_report{rep.to_json()};
  });
}

fc_status fc_ablate(const char* config_path, const char* eval_manifest, const char* counts_csv,
                    const char* seeds_csv, const char* out_dir, int jobs, fc_report** out) {
  return guarded([&] {
    using namespace fashioncut;
    if (!config_path || !eval_manifest || !counts_csv || !seeds_csv || !out_dir)
      throw ParamError("config_path, eval_manifest, counts_csv, seeds_csv, out_dir required");
    TrainConfig cfg = load_train_config(config_path);
    std::vector<int64_t> counts;
    for (uint64_t v : parse_u64_csv(counts_csv)) counts.push_back(static_cast<int64_t>(v));
    std::vector<uint64_t> seeds = parse_u64_csv(seeds_csv);
    ExperimentReport rep =
        ablation_sweep(cfg, eval_manifest, counts, seeds, out_dir, jobs < 1 ? 1 : jobs);
    emit_report(rep, out_dir);
    if (out) *out = new fc_report{rep.to_json()};
  });
}

const char* fc_report_json(const fc_report* report) {
  return report ? report->json_text.c_str() : "";
}

void fc_report_free(fc_report* report) { delete report; }

fc_status fc_translate_preview(const char* checkpoint_path, const char* manifest_path, int n,
                               const char* out_png) {
  return guarded([&] {
    using namespace fashioncut;
    if (!checkpoint_path || !manifest_path || !out_png)
      throw ParamError("checkpoint_path, manifest_path and out_png are required");
    if (n < 1) throw ParamError("n must be >= 1");
    LoadedModel lm = load_model(checkpoint_path);
    DatasetManifest m = load_manifest(manifest_path);
    if (static_cast<size_t>(n) > m.rows.size())
      throw ParamError("n exceeds manifest rows (" + std::to_string(m.rows.size()) + ")");

    std::vector<ImageU8> inputs, outputs;
    Tensor<float> batch({n, m.image_size, m.image_size, 3});
    for (int i = 0; i < n; ++i) {
      ImageU8 img = read_png(m.image_path(static_cast<size_t>(i)));
      image_into_batch(img, batch, i);
      inputs.push_back(std::move(img));
    }
    Tensor<float> translated = lm.model->generator.translate(batch, nullptr);
    for (int i = 0; i < n; ++i) outputs.push_back(batch_to_image(translated, i));
    write_png(out_png, make_preview_grid(inputs, outputs));
  });
}

}  // extern "C"
