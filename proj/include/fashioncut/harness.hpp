#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "fashioncut/dataset.hpp"
#include "fashioncut/trainer.hpp"

namespace fashioncut {

struct EvalResult {
  std::string experiment;  // "compare" | "ablation" | "eval"
  std::string method;
  uint64_t seed = 0;
  double accuracy = 0.0;
  int64_t n_eval = 0;
  int64_t synthetic_count = 0;
  std::array<double, kNumClasses> per_class_accuracy{};
};

struct AblationPoint {
  int64_t synthetic_count = 0;
  double accuracy = 0.0;
  uint64_t seed = 0;
};

// Reported full-scale reference accuracies, kept for context next to the
// desk-scale numbers (they are not reproducible here).
struct ReferenceRow {
  std::string method;
  double accuracy;
};
const std::vector<ReferenceRow>& reference_full_scale_results();

struct ExperimentReport {
  std::vector<EvalResult> results;
  std::vector<AblationPoint> ablation_points;
  std::string config_json;  // snapshot of the base TrainConfig

  std::string to_json() const;
  static ExperimentReport from_json(const std::string& text);
  bool operator==(const ExperimentReport& o) const;
};

inline constexpr const char* kResultsCsvHeader =
    "experiment,method,synthetic_count,seed,accuracy,n_eval";

// accuracy of argmax predictions on a labeled eval set; never mutates the
// classifier. Batched; result independent of batch size.
EvalResult evaluate_accuracy(const ClassifierNet<float>& classifier, const LabeledData& eval_data,
                             int eval_batch = 64);

EvalResult evaluate_checkpoint(const std::string& checkpoint_path,
                               const std::string& eval_manifest);

// The four method recipes distinguished in the comparison experiment.
enum class Method {
  kNoAdaptation,     // classifier on raw synthetic only
  kTranslationOnly,  // lambda_c=0 translation, then classifier on translated
  kFashionCut,       // joint training, pseudo-labels off
  kFashionCutPseudo, // joint training, pseudo-labels on
};
const char* method_name(Method m);
Method method_from_name(const std::string& name);

// Trains and evaluates each (method, seed) pair on shared data. Run
// artifacts land under <out_dir>/runs/<method>_seed<seed>/.
ExperimentReport compare_methods(const TrainConfig& base, const std::string& eval_manifest,
                                 const std::vector<Method>& methods,
                                 const std::vector<uint64_t>& seeds, const std::string& out_dir,
                                 int jobs = 1);

// fashion_cut_pseudo trained per (synthetic_count, seed) on balanced subsets
// of the source dataset with a fixed real pool.
ExperimentReport ablation_sweep(const TrainConfig& base, const std::string& eval_manifest,
                                const std::vector<int64_t>& synthetic_counts,
                                const std::vector<uint64_t>& seeds, const std::string& out_dir,
                                int jobs = 1);

// report.json + results.csv + charts into out_dir.
void emit_report(const ExperimentReport& report, const std::string& out_dir);

// balanced in-memory subset: floor(count/7) images per class, taken in
// manifest order
LabeledData balanced_subset(const LabeledData& full, int64_t count);

}  // namespace fashioncut
