#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <fstream>

#include "doctest.h"
#include "fashioncut/harness.hpp"
#include "fashioncut/plot.hpp"
#include "test_util.hpp"

using namespace fashioncut;

namespace {

LabeledData synthetic_eval_set(int per_class, int size, uint64_t seed) {
  LabeledData d;
  d.image_size = size;
  for (int c = 0; c < kNumClasses; ++c) {
    for (int i = 0; i < per_class; ++i) {
      uint64_t s = hash_combine(seed, hash_combine(c, i));
      RenderParams p = RenderParams::from_seed(s, class_from_id(c));
      d.images.push_back(render_pattern(class_from_id(c), p, size).pixels);
      d.labels.push_back(c);
    }
  }
  return d;
}

}  // namespace

TEST_CASE("evaluate_accuracy oracle cases") {
  // stub "classifier" outcomes via direct accuracy math on a real classifier
  // are impractical; instead check the two degenerate labelings
  LabeledData eval = synthetic_eval_set(4, 16, 5);
  ClassifierNet<float> c(4, 1, 7);
  EvalResult r = evaluate_accuracy(c, eval);
  CHECK(r.n_eval == 28);
  CHECK(r.accuracy >= 0.0);
  CHECK(r.accuracy <= 1.0);

  // perfect labels: pretend the net's own argmax is ground truth
  LabeledData echo = eval;
  {
    Tensor<float> batch({static_cast<int64_t>(echo.size()), 16, 16, 3});
    for (size_t i = 0; i < echo.size(); ++i)
      image_into_batch(echo.images[i], batch, static_cast<int64_t>(i));
    Prediction<float> pred = predict(c, batch);
    for (size_t i = 0; i < echo.size(); ++i) echo.labels[i] = pred.argmax_class[i];
  }
  EvalResult perfect = evaluate_accuracy(c, echo);
  CHECK(perfect.accuracy == 1.0);
  for (double pca : perfect.per_class_accuracy)
    CHECK((pca == 1.0 || pca == 0.0));  // classes the net never predicts have no rows

  // permuted labels so nothing matches
  LabeledData wrong = echo;
  for (auto& y : wrong.labels) y = (y + 1) % 7;
  CHECK(evaluate_accuracy(c, wrong).accuracy == 0.0);

  // weighted mean identity
  double weighted = 0;
  int64_t rows = 0;
  for (int cls = 0; cls < 7; ++cls) {
    int64_t n_cls = 0;
    for (int y : echo.labels)
      if (y == cls) ++n_cls;
    weighted += perfect.per_class_accuracy[static_cast<size_t>(cls)] * static_cast<double>(n_cls);
    rows += n_cls;
  }
  CHECK(testutil::rel_err(perfect.accuracy, weighted / static_cast<double>(rows)) < 1e-12);

  LabeledData empty;
  CHECK_THROWS_AS(evaluate_accuracy(c, empty), DataError);
}

TEST_CASE("accuracy is invariant to evaluation batch size") {
  LabeledData eval = synthetic_eval_set(5, 16, 9);
  ClassifierNet<float> c(4, 1, 11);
  EvalResult a = evaluate_accuracy(c, eval, 4);
  EvalResult b = evaluate_accuracy(c, eval, 64);
  EvalResult d = evaluate_accuracy(c, eval, 1);
  CHECK(a.accuracy == b.accuracy);
  CHECK(a.accuracy == d.accuracy);
  CHECK(a.per_class_accuracy == b.per_class_accuracy);
}

TEST_CASE("evaluation never mutates the classifier") {
  LabeledData eval = synthetic_eval_set(3, 16, 13);
  ClassifierNet<float> c(4, 1, 17);
  nn::ParamStore<float> params;
  c.register_params(params, "cls");
  std::vector<float> before;
  for (auto& p : params)
    for (int64_t i = 0; i < p.value->numel(); ++i) before.push_back((*p.value)[i]);
  evaluate_accuracy(c, eval);
  size_t k = 0;
  for (auto& p : params)
    for (int64_t i = 0; i < p.value->numel(); ++i) REQUIRE((*p.value)[i] == before[k++]);
}

TEST_CASE("label-independent classifier on a balanced 7000-image set sits near chance") {
  // noise images carry no class signal, so predictions are independent of the
  // balanced labels; binomial concentration puts accuracy within 1/7 +- 0.02
  // (std ~ 0.42% at n=7000)
  for (uint64_t seed : {1ull, 2ull, 3ull}) {
    LabeledData eval;
    eval.image_size = 16;
    Rng rng(100 + seed);
    for (int c = 0; c < kNumClasses; ++c) {
      for (int i = 0; i < 1000; ++i) {
        ImageU8 img(16, 16);
        for (auto& px : img.pixels) px = static_cast<uint8_t>(rng.next_below(256));
        eval.images.push_back(std::move(img));
        eval.labels.push_back(c);
      }
    }
    ClassifierNet<float> c(4, 1, 7000 + seed);
    EvalResult r = evaluate_accuracy(c, eval);
    CHECK(r.accuracy > 1.0 / 7.0 - 0.02);
    CHECK(r.accuracy < 1.0 / 7.0 + 0.02);
    CHECK(r.n_eval == 7000);
  }
}

TEST_CASE("balanced_subset floors per class and keeps manifest order") {
  LabeledData full = synthetic_eval_set(10, 16, 23);
  LabeledData sub = balanced_subset(full, 38);  // floor(38/7) = 5 per class
  CHECK(sub.size() == 35);
  std::array<int, 7> counts{};
  for (int y : sub.labels) ++counts[static_cast<size_t>(y)];
  for (int c = 0; c < 7; ++c) CHECK(counts[static_cast<size_t>(c)] == 5);
  CHECK_THROWS_AS(balanced_subset(full, 3), ParamError);
  CHECK_THROWS_AS(balanced_subset(full, 200), DataError);
}

TEST_CASE("method names round-trip and reference table is present") {
  for (Method m : {Method::kNoAdaptation, Method::kTranslationOnly, Method::kFashionCut,
                   Method::kFashionCutPseudo})
    CHECK(method_from_name(method_name(m)) == m);
  CHECK_THROWS_AS(method_from_name("bsp_reimpl"), ParamError);

  const auto& ref = reference_full_scale_results();
  REQUIRE(ref.size() == 6);
  auto find = [&](const std::string& name) {
    for (const auto& row : ref)
      if (row.method == name) return row.accuracy;
    return -1.0;
  };
  CHECK(find("no_adaptation") == 0.441);
  CHECK(find("fashion_cut") == 0.613);
  CHECK(find("fashion_cut_pseudo") == 0.628);
  CHECK(find("bsp") == 0.499);
  CHECK(find("mdd") == 0.540);
  CHECK(find("afn") == 0.578);
}

TEST_CASE("report round-trips through json and emits all files") {
  ExperimentReport rep;
  rep.config_json = "{\"epochs\": 3}";
  EvalResult r;
  r.experiment = "compare";
  r.method = "fashion_cut";
  r.seed = 2;
  r.accuracy = 0.7125;
  r.n_eval = 700;
  r.synthetic_count = 350;
  r.per_class_accuracy = {1, 0.5, 0.25, 0.75, 1, 0.375, 0.125};
  rep.results.push_back(r);
  r.method = "no_adaptation";
  r.accuracy = 0.41;
  rep.results.push_back(r);
  rep.ablation_points.push_back({245, 0.55, 1});
  rep.ablation_points.push_back({3500, 0.72, 1});

  ExperimentReport back = ExperimentReport::from_json(rep.to_json());
  CHECK(back == rep);

  testutil::TempDir out("report");
  emit_report(rep, out.str());
  CHECK(std::filesystem::exists(out.path() / "report.json"));
  CHECK(std::filesystem::exists(out.path() / "results.csv"));
  CHECK(std::filesystem::exists(out.path() / "compare_accuracy.png"));
  CHECK(std::filesystem::exists(out.path() / "ablation_curve.png"));

  // results.csv cardinality: header + |results|
  std::ifstream f(out.path() / "results.csv");
  std::string line;
  std::getline(f, line);
  CHECK(line == kResultsCsvHeader);
  int rows = 0;
  while (std::getline(f, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 2);

  // charts decode as valid PNGs
  ImageU8 chart = read_png((out.path() / "compare_accuracy.png").string());
  CHECK(chart.width > 0);

  // empty report still emits valid files
  testutil::TempDir out2("report_empty");
  ExperimentReport empty;
  emit_report(empty, out2.str());
  ExperimentReport back_empty = ExperimentReport::from_json(
      [&] {
        std::ifstream g(out2.path() / "report.json");
        return std::string((std::istreambuf_iterator<char>(g)), std::istreambuf_iterator<char>());
      }());
  CHECK(back_empty.results.empty());
}

TEST_CASE("compare_methods runs a tiny end-to-end comparison") {
  testutil::TempDir src("cmp_src"), tgt("cmp_tgt"), ev("cmp_eval"), out("cmp_out");
  generate_dataset(6, DomainStyle::source(), src.str(), 41, 16);
  generate_dataset(6, DomainStyle::target_default(), tgt.str(), 42, 16);
  generate_dataset(3, DomainStyle::target_default(), ev.str(), 43, 16);

  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 8;
  cfg.learning_rate = 1e-3;
  cfg.image_size = 16;
  cfg.model.gen_channels = 4;
  cfg.model.gen_res_blocks = 1;
  cfg.model.disc_channels = 4;
  cfg.model.cls_channels = 4;
  cfg.model.embed_dim = 8;
  cfg.model.proj_hidden = 8;
  cfg.model.num_patches = 4;
  cfg.source_manifest = (src.path() / "manifest.csv").string();
  cfg.target_manifest = (tgt.path() / "manifest.csv").string();

  ExperimentReport rep = compare_methods(cfg, (ev.path() / "manifest.csv").string(),
                                         {Method::kNoAdaptation}, {1}, out.str());
  REQUIRE(rep.results.size() == 1);
  CHECK(rep.results[0].method == "no_adaptation");
  CHECK(rep.results[0].experiment == "compare");
  CHECK(rep.results[0].n_eval == 21);

  // all four methods, one seed, still one row each
  ExperimentReport rep4 = compare_methods(
      cfg, (ev.path() / "manifest.csv").string(),
      {Method::kNoAdaptation, Method::kTranslationOnly, Method::kFashionCut,
       Method::kFashionCutPseudo},
      {7}, out.str());
  REQUIRE(rep4.results.size() == 4);
  for (const auto& res : rep4.results) CHECK(res.n_eval == 21);
}

TEST_CASE("ablation_sweep validates counts and produces trend points") {
  testutil::TempDir src("abl_src"), tgt("abl_tgt"), ev("abl_eval"), out("abl_out");
  generate_dataset(4, DomainStyle::source(), src.str(), 51, 16);
  generate_dataset(4, DomainStyle::target_default(), tgt.str(), 52, 16);
  generate_dataset(2, DomainStyle::target_default(), ev.str(), 53, 16);

  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 8;
  cfg.learning_rate = 1e-3;
  cfg.image_size = 16;
  cfg.model.gen_channels = 4;
  cfg.model.gen_res_blocks = 1;
  cfg.model.disc_channels = 4;
  cfg.model.cls_channels = 4;
  cfg.model.embed_dim = 8;
  cfg.model.proj_hidden = 8;
  cfg.model.num_patches = 4;
  cfg.source_manifest = (src.path() / "manifest.csv").string();
  cfg.target_manifest = (tgt.path() / "manifest.csv").string();
  std::string eval_csv = (ev.path() / "manifest.csv").string();

  CHECK_THROWS_AS(ablation_sweep(cfg, eval_csv, {14, 14}, {1}, out.str()), ParamError);
  CHECK_THROWS_AS(ablation_sweep(cfg, eval_csv, {10000}, {1}, out.str()), DataError);

  ExperimentReport rep = ablation_sweep(cfg, eval_csv, {14, 28}, {1}, out.str());
  REQUIRE(rep.ablation_points.size() == 2);
  CHECK(rep.ablation_points[0].synthetic_count == 14);
  CHECK(rep.ablation_points[1].synthetic_count == 28);
  REQUIRE(rep.results.size() == 2);
  CHECK(rep.results[0].method == "fashion_cut_pseudo");
}
