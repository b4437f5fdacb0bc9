#include "fashioncut/harness.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <thread>

#include "fashioncut/plot.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace fashioncut {

const std::vector<ReferenceRow>& reference_full_scale_results() {
  static const std::vector<ReferenceRow> rows = {
      {"no_adaptation", 0.441}, {"bsp", 0.499},        {"mdd", 0.540},
      {"afn", 0.578},           {"fashion_cut", 0.613}, {"fashion_cut_pseudo", 0.628},
  };
  return rows;
}

const char* method_name(Method m) {
  switch (m) {
    case Method::kNoAdaptation: return "no_adaptation";
    case Method::kTranslationOnly: return "translation_only";
    case Method::kFashionCut: return "fashion_cut";
    case Method::kFashionCutPseudo: return "fashion_cut_pseudo";
  }
  return "?";
}

Method method_from_name(const std::string& name) {
  if (name == "no_adaptation") return Method::kNoAdaptation;
  if (name == "translation_only") return Method::kTranslationOnly;
  if (name == "fashion_cut") return Method::kFashionCut;
  if (name == "fashion_cut_pseudo") return Method::kFashionCutPseudo;
  throw ParamError("unknown method: " + name +
                   " (expected no_adaptation|translation_only|fashion_cut|fashion_cut_pseudo)");
}

EvalResult evaluate_accuracy(const ClassifierNet<float>& classifier, const LabeledData& eval_data,
                             int eval_batch) {
  if (eval_data.size() == 0) throw DataError("evaluation set is empty");
  std::array<int64_t, kNumClasses> correct{}, total{};
  const int64_t n = static_cast<int64_t>(eval_data.size());
  for (int64_t begin = 0; begin < n; begin += eval_batch) {
    const int64_t end = std::min<int64_t>(begin + eval_batch, n);
    Tensor<float> batch({end - begin, eval_data.image_size, eval_data.image_size, 3});
    for (int64_t i = begin; i < end; ++i)
      image_into_batch(eval_data.images[static_cast<size_t>(i)], batch, i - begin);
    Prediction<float> pred = predict(classifier, batch);
    for (int64_t i = begin; i < end; ++i) {
      const int y = eval_data.labels[static_cast<size_t>(i)];
      ++total[static_cast<size_t>(y)];
      if (pred.argmax_class[static_cast<size_t>(i - begin)] == y)
        ++correct[static_cast<size_t>(y)];
    }
  }
  EvalResult r;
  r.experiment = "eval";
  r.n_eval = n;
  int64_t hits = 0;
  for (int c = 0; c < kNumClasses; ++c) {
    hits += correct[static_cast<size_t>(c)];
    r.per_class_accuracy[static_cast<size_t>(c)] =
        total[static_cast<size_t>(c)] == 0
            ? 0.0
            : static_cast<double>(correct[static_cast<size_t>(c)]) /
                  static_cast<double>(total[static_cast<size_t>(c)]);
  }
  r.accuracy = static_cast<double>(hits) / static_cast<double>(n);
  return r;
}

EvalResult evaluate_checkpoint(const std::string& checkpoint_path,
                               const std::string& eval_manifest) {
  LoadedModel lm = load_model(checkpoint_path);
  LabeledData eval_data = LabeledData::load(load_manifest(eval_manifest));
  if (eval_data.image_size != lm.config.image_size)
    throw DataError("eval manifest image size does not match checkpoint image size");
  return evaluate_accuracy(lm.model->classifier, eval_data);
}

LabeledData balanced_subset(const LabeledData& full, int64_t count) {
  const int64_t per_class = count / kNumClasses;
  if (per_class < 1) throw ParamError("synthetic count too small: " + std::to_string(count));
  LabeledData out;
  out.image_size = full.image_size;
  std::array<int64_t, kNumClasses> taken{};
  for (size_t i = 0; i < full.size(); ++i) {
    const int y = full.labels[i];
    if (taken[static_cast<size_t>(y)] < per_class) {
      out.images.push_back(full.images[i]);
      out.labels.push_back(y);
      ++taken[static_cast<size_t>(y)];
    }
  }
  for (int c = 0; c < kNumClasses; ++c)
    if (taken[static_cast<size_t>(c)] != per_class)
      throw DataError("source dataset has fewer than " + std::to_string(per_class) +
                      " images for class " + class_name(static_cast<PatternClass>(c)));
  return out;
}

namespace {

TrainConfig with_seed(TrainConfig cfg, uint64_t seed) {
  cfg.seed = seed;
  return cfg;
}

TrainConfig pseudo_off(TrainConfig cfg) {
  cfg.pseudo_policy.mix_fraction = 0.0;
  return cfg;
}

// one (method, seed) pipeline; returns the final classifier checkpoint path
std::string run_method(Method m, const TrainConfig& base, uint64_t seed,
                       const LabeledData& source, const UnlabeledData& target,
                       const std::string& run_dir) {
  TrainConfig cfg = with_seed(base, seed);
  switch (m) {
    case Method::kNoAdaptation: {
      TrainConfig c = pseudo_off(cfg);
      return run_classifier_training(c, source, run_dir).final_checkpoint;
    }
    case Method::kTranslationOnly: {
      TrainConfig trans = pseudo_off(cfg);
      trans.loss_weights.lambda_c = 0.0;
      TrainOutputs t = run_training(trans, source, target, run_dir + "/translation");
      TrainConfig cls = pseudo_off(cfg);
      return run_classifier_training(cls, source, run_dir, t.final_checkpoint).final_checkpoint;
    }
    case Method::kFashionCut: {
      TrainConfig c = pseudo_off(cfg);
      return run_training(c, source, target, run_dir).final_checkpoint;
    }
    case Method::kFashionCutPseudo: {
      return run_training(cfg, source, target, run_dir).final_checkpoint;
    }
  }
  throw ParamError("unknown method id");
}

void run_jobs(const std::vector<std::function<void()>>& tasks, int jobs) {
  if (jobs <= 1) {
    for (const auto& t : tasks) t();
    return;
  }
  std::mutex mu;
  size_t next = 0;
  std::vector<std::thread> workers;
  std::exception_ptr first_error;
  for (int j = 0; j < jobs; ++j) {
    workers.emplace_back([&] {
      for (;;) {
        size_t mine;
        {
          std::lock_guard<std::mutex> lk(mu);
          if (next >= tasks.size() || first_error) return;
          mine = next++;
        }
        try {
          tasks[mine]();
        } catch (...) {
          std::lock_guard<std::mutex> lk(mu);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

ExperimentReport compare_methods(const TrainConfig& base, const std::string& eval_manifest,
                                 const std::vector<Method>& methods,
                                 const std::vector<uint64_t>& seeds, const std::string& out_dir,
                                 int jobs) {
  base.validate();
  ExperimentReport report;
  report.config_json = train_config_to_json(base);
  if (methods.empty() || seeds.empty()) return report;

  LabeledData source = LabeledData::load(load_manifest(base.source_manifest));
  UnlabeledData target = UnlabeledData::load_from_csv(base.target_manifest);
  LabeledData eval_data = LabeledData::load(load_manifest(eval_manifest));

  struct Slot {
    Method method;
    uint64_t seed;
    EvalResult result;
  };
  std::vector<Slot> slots;
  for (Method m : methods)
    for (uint64_t s : seeds) slots.push_back(Slot{m, s, {}});

  std::vector<std::function<void()>> tasks;
  for (auto& slot : slots) {
    tasks.push_back([&slot, &base, &source, &target, &eval_data, &out_dir] {
      std::string run_dir = out_dir + "/runs/" + std::string(method_name(slot.method)) +
                            "_seed" + std::to_string(slot.seed);
      std::string ckpt = run_method(slot.method, base, slot.seed, source, target, run_dir);
      LoadedModel lm = load_model(ckpt);
      EvalResult r = evaluate_accuracy(lm.model->classifier, eval_data);
      r.experiment = "compare";
      r.method = method_name(slot.method);
      r.seed = slot.seed;
      r.synthetic_count = static_cast<int64_t>(source.size());
      slot.result = r;
    });
  }
  run_jobs(tasks, jobs);
  for (auto& slot : slots) report.results.push_back(slot.result);
  return report;
}

ExperimentReport ablation_sweep(const TrainConfig& base, const std::string& eval_manifest,
                                const std::vector<int64_t>& synthetic_counts,
                                const std::vector<uint64_t>& seeds, const std::string& out_dir,
                                int jobs) {
  base.validate();
  for (size_t i = 1; i < synthetic_counts.size(); ++i)
    if (synthetic_counts[i] <= synthetic_counts[i - 1])
      throw ParamError("synthetic counts must be strictly ascending");

  ExperimentReport report;
  report.config_json = train_config_to_json(base);
  if (synthetic_counts.empty() || seeds.empty()) return report;

  LabeledData full_source = LabeledData::load(load_manifest(base.source_manifest));
  UnlabeledData target = UnlabeledData::load_from_csv(base.target_manifest);
  LabeledData eval_data = LabeledData::load(load_manifest(eval_manifest));
  for (int64_t c : synthetic_counts)
    if (c > static_cast<int64_t>(full_source.size()))
      throw DataError("synthetic count " + std::to_string(c) + " exceeds dataset size " +
                      std::to_string(full_source.size()));

  struct Slot {
    int64_t count;
    uint64_t seed;
    EvalResult result;
  };
  std::vector<Slot> slots;
  for (int64_t c : synthetic_counts)
    for (uint64_t s : seeds) slots.push_back(Slot{c, s, {}});

  std::vector<std::function<void()>> tasks;
  for (auto& slot : slots) {
    tasks.push_back([&slot, &base, &full_source, &target, &eval_data, &out_dir] {
      LabeledData subset = balanced_subset(full_source, slot.count);
      std::string run_dir = out_dir + "/runs/ablate_n" + std::to_string(slot.count) + "_seed" +
                            std::to_string(slot.seed);
      TrainConfig cfg = with_seed(base, slot.seed);
      TrainOutputs t = run_training(cfg, subset, target, run_dir);
      LoadedModel lm = load_model(t.final_checkpoint);
      EvalResult r = evaluate_accuracy(lm.model->classifier, eval_data);
      r.experiment = "ablation";
      r.method = "fashion_cut_pseudo";
      r.seed = slot.seed;
      r.synthetic_count = slot.count;
      slot.result = r;
    });
  }
  run_jobs(tasks, jobs);
  for (auto& slot : slots) {
    report.results.push_back(slot.result);
    report.ablation_points.push_back(
        AblationPoint{slot.result.synthetic_count, slot.result.accuracy, slot.result.seed});
  }
  return report;
}

// --- report serialization ----------------------------------------------------

namespace {

json result_to_json(const EvalResult& r) {
  json j;
  j["experiment"] = r.experiment;
  j["method"] = r.method;
  j["seed"] = r.seed;
  j["accuracy"] = r.accuracy;
  j["n_eval"] = r.n_eval;
  j["synthetic_count"] = r.synthetic_count;
  j["per_class_accuracy"] = r.per_class_accuracy;
  return j;
}

EvalResult result_from_json(const json& j) {
  EvalResult r;
  r.experiment = j.at("experiment").get<std::string>();
  r.method = j.at("method").get<std::string>();
  r.seed = j.at("seed").get<uint64_t>();
  r.accuracy = j.at("accuracy").get<double>();
  r.n_eval = j.at("n_eval").get<int64_t>();
  r.synthetic_count = j.at("synthetic_count").get<int64_t>();
  auto pa = j.at("per_class_accuracy").get<std::vector<double>>();
  for (size_t i = 0; i < r.per_class_accuracy.size() && i < pa.size(); ++i)
    r.per_class_accuracy[i] = pa[i];
  return r;
}

}  // namespace

std::string ExperimentReport::to_json() const {
  json j;
  j["schema"] = "fashioncut-report-1";
  j["results"] = json::array();
  for (const auto& r : results) j["results"].push_back(result_to_json(r));
  j["ablation_points"] = json::array();
  for (const auto& p : ablation_points)
    j["ablation_points"].push_back(
        {{"synthetic_count", p.synthetic_count}, {"accuracy", p.accuracy}, {"seed", p.seed}});
  j["config"] = json::parse(config_json.empty() ? "{}" : config_json);
  json ref = json::object();
  for (const auto& row : reference_full_scale_results()) ref[row.method] = row.accuracy;
  j["reference_full_scale"] = {
      {"note", "reported full-scale accuracies for context; not reproducible at desk scale"},
      {"accuracy", ref},
      {"min_synthetic_images_to_lead", 5000}};
  return j.dump(2);
}

ExperimentReport ExperimentReport::from_json(const std::string& text) {
  json j = json::parse(text);
  ExperimentReport rep;
  for (const auto& r : j.at("results")) rep.results.push_back(result_from_json(r));
  for (const auto& p : j.at("ablation_points"))
    rep.ablation_points.push_back(AblationPoint{p.at("synthetic_count").get<int64_t>(),
                                                p.at("accuracy").get<double>(),
                                                p.at("seed").get<uint64_t>()});
  rep.config_json = j.at("config").dump(2);
  return rep;
}

bool ExperimentReport::operator==(const ExperimentReport& o) const {
  auto res_eq = [](const EvalResult& a, const EvalResult& b) {
    return a.experiment == b.experiment && a.method == b.method && a.seed == b.seed &&
           a.accuracy == b.accuracy && a.n_eval == b.n_eval &&
           a.synthetic_count == b.synthetic_count &&
           a.per_class_accuracy == b.per_class_accuracy;
  };
  if (results.size() != o.results.size() || ablation_points.size() != o.ablation_points.size())
    return false;
  for (size_t i = 0; i < results.size(); ++i)
    if (!res_eq(results[i], o.results[i])) return false;
  for (size_t i = 0; i < ablation_points.size(); ++i) {
    if (ablation_points[i].synthetic_count != o.ablation_points[i].synthetic_count ||
        ablation_points[i].accuracy != o.ablation_points[i].accuracy ||
        ablation_points[i].seed != o.ablation_points[i].seed)
      return false;
  }
  return json::parse(config_json.empty() ? "{}" : config_json) ==
         json::parse(o.config_json.empty() ? "{}" : o.config_json);
}

void emit_report(const ExperimentReport& report, const std::string& out_dir) {
  fs::create_directories(out_dir);

  {
    std::string path = (fs::path(out_dir) / "report.json").string();
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("cannot write report: " + path);
    f << report.to_json() << "\n";
  }
  {
    std::string path = (fs::path(out_dir) / "results.csv").string();
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("cannot write results csv: " + path);
    f << kResultsCsvHeader << "\n";
    char buf[256];
    for (const auto& r : report.results) {
      std::snprintf(buf, sizeof(buf), "%s,%s,%" PRId64 ",%" PRIu64 ",%.6f,%" PRId64 "\n",
                    r.experiment.c_str(), r.method.c_str(), r.synthetic_count, r.seed, r.accuracy,
                    r.n_eval);
      f << buf;
    }
  }

  // charts: per-method bars for the comparison, accuracy-vs-count curve for
  // the ablation
  std::vector<std::pair<std::string, std::vector<double>>> bars;
  for (const auto& r : report.results) {
    if (r.experiment != "compare") continue;
    auto it = std::find_if(bars.begin(), bars.end(),
                           [&](const auto& kv) { return kv.first == r.method; });
    if (it == bars.end()) {
      bars.push_back({r.method, {r.accuracy}});
    } else {
      it->second.push_back(r.accuracy);
    }
  }
  if (!bars.empty()) {
    std::vector<BarDatum> data;
    for (auto& [m, accs] : bars) {
      std::sort(accs.begin(), accs.end());
      double median = accs[accs.size() / 2];
      if (accs.size() % 2 == 0) median = 0.5 * (median + accs[accs.size() / 2 - 1]);
      data.push_back(BarDatum{m, median});
    }
    render_bar_chart(data, "median accuracy by method",
                     (fs::path(out_dir) / "compare_accuracy.png").string());
  }
  if (!report.ablation_points.empty()) {
    std::map<int64_t, std::vector<double>> by_count;
    for (const auto& p : report.ablation_points)
      by_count[p.synthetic_count].push_back(p.accuracy);
    std::vector<CurvePoint> pts;
    for (auto& [count, accs] : by_count) {
      double mean = 0;
      for (double a : accs) mean += a;
      pts.push_back(CurvePoint{static_cast<double>(count), mean / static_cast<double>(accs.size())});
    }
    render_curve_chart(pts, "synthetic images", "accuracy",
                       (fs::path(out_dir) / "ablation_curve.png").string());
  }
}

}  // namespace fashioncut
