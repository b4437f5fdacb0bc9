// Command-line front end. All functionality goes through the C API of the
// shared library; this file only parses flags and formats output.
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fashioncut_c.h"
#include "json.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

int status_to_exit(fc_status s) {
  switch (s) {
    case FC_OK: return kExitOk;
    case FC_ERR_PARAM: return kExitUsage;
    case FC_ERR_RUNTIME: return kExitRuntime;
  }
  return kExitRuntime;
}

int fail(fc_status s) {
  std::fprintf(stderr, "error: %s\n", fc_last_error());
  return status_to_exit(s);
}

void echo_config(const nlohmann::json& j) {
  std::printf("effective-config: %s\n", j.dump().c_str());
}

std::string own_string(char* s) {
  std::string out = s ? s : "";
  fc_string_free(s);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fashioncut: synthetic-to-real pattern classification pipeline"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  // gen-data
  std::string gd_out, gd_domain = "source";
  int gd_per_class = 0, gd_image_size = 64;
  uint64_t gd_seed = 1;
  CLI::App* gen = app.add_subcommand("gen-data", "generate a labeled pattern dataset");
  gen->add_option("--out", gd_out, "output directory")->required();
  gen->add_option("--per-class", gd_per_class, "images per class")->required();
  gen->add_option("--domain", gd_domain, "source|target")->default_val("source");
  gen->add_option("--seed", gd_seed, "dataset seed")->default_val(1);
  gen->add_option("--image-size", gd_image_size, "square image size")->default_val(64);

  // train
  std::string tr_config, tr_out, tr_resume;
  CLI::App* train = app.add_subcommand("train", "run joint translation+classifier training");
  train->add_option("--config", tr_config, "train config JSON")->required();
  train->add_option("--out", tr_out, "output directory")->required();
  train->add_option("--resume", tr_resume, "resume from this checkpoint");

  // eval
  std::string ev_ckpt, ev_manifest, ev_out;
  CLI::App* ev = app.add_subcommand("eval", "evaluate a checkpoint on a labeled manifest");
  ev->add_option("--checkpoint", ev_ckpt, "model checkpoint")->required();
  ev->add_option("--manifest", ev_manifest, "labeled eval manifest.csv")->required();
  ev->add_option("--out", ev_out, "optional report JSON path");

  // compare
  std::string cp_config, cp_eval, cp_methods = "no_adaptation,translation_only,fashion_cut,fashion_cut_pseudo";
  std::string cp_seeds = "1,2,3", cp_out;
  int cp_jobs = 1;
  CLI::App* cp = app.add_subcommand("compare", "train and evaluate method variants");
  cp->add_option("--config", cp_config, "base train config JSON")->required();
  cp->add_option("--eval-manifest", cp_eval, "labeled eval manifest.csv")->required();
  cp->add_option("--methods", cp_methods, "comma-separated method list");
  cp->add_option("--seeds", cp_seeds, "comma-separated seeds");
  cp->add_option("--out", cp_out, "output directory")->required();
  cp->add_option("--jobs", cp_jobs, "parallel runs")->default_val(1);

  // ablate
  std::string ab_config, ab_eval, ab_counts, ab_seeds = "1,2", ab_out;
  int ab_jobs = 1;
  CLI::App* ab = app.add_subcommand("ablate", "dataset-size ablation sweep");
  ab->add_option("--config", ab_config, "base train config JSON")->required();
  ab->add_option("--eval-manifest", ab_eval, "labeled eval manifest.csv")->required();
  ab->add_option("--counts", ab_counts, "ascending synthetic-image counts")->required();
  ab->add_option("--seeds", ab_seeds, "comma-separated seeds");
  ab->add_option("--out", ab_out, "output directory")->required();
  ab->add_option("--jobs", ab_jobs, "parallel runs")->default_val(1);

  // translate-preview
  std::string tp_ckpt, tp_manifest, tp_out;
  int tp_n = 6;
  CLI::App* tp = app.add_subcommand("translate-preview", "input/translation image grid");
  tp->add_option("--checkpoint", tp_ckpt, "model checkpoint")->required();
  tp->add_option("--manifest", tp_manifest, "manifest of images to translate")->required();
  tp->add_option("--n", tp_n, "columns in the grid")->default_val(6);
  tp->add_option("--out", tp_out, "output PNG path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (gen->parsed()) {
    echo_config({{"command", "gen-data"},
                 {"out", gd_out},
                 {"per_class", gd_per_class},
                 {"domain", gd_domain},
                 {"seed", gd_seed},
                 {"image_size", gd_image_size}});
    char* manifest = nullptr;
    fc_status s = fc_generate_dataset(gd_out.c_str(), gd_per_class, gd_domain.c_str(), gd_seed,
                                      gd_image_size, &manifest);
    if (s != FC_OK) return fail(s);
    std::printf("%s\n", own_string(manifest).c_str());
    return kExitOk;
  }

  if (train->parsed()) {
    char* resolved = nullptr;
    fc_status rs = fc_resolve_train_config(tr_config.c_str(), &resolved);
    if (rs != FC_OK) return fail(rs);
    echo_config(nlohmann::json::parse(own_string(resolved)));
    char* summary = nullptr;
    fc_status s = fc_train(tr_config.c_str(), tr_out.c_str(),
                           tr_resume.empty() ? nullptr : tr_resume.c_str(), &summary);
    if (s != FC_OK) return fail(s);
    std::printf("%s\n", own_string(summary).c_str());
    return kExitOk;
  }

  if (ev->parsed()) {
    echo_config({{"command", "eval"}, {"checkpoint", ev_ckpt}, {"manifest", ev_manifest}});
    fc_report* report = nullptr;
    fc_status s = fc_evaluate(ev_ckpt.c_str(), ev_manifest.c_str(), &report);
    if (s != FC_OK) return fail(s);
    nlohmann::json j = nlohmann::json::parse(fc_report_json(report));
    const auto& r = j.at("results").at(0);
    std::printf("accuracy=%.6f n_eval=%lld\n", r.at("accuracy").get<double>(),
                static_cast<long long>(r.at("n_eval").get<int64_t>()));
    if (!ev_out.empty()) {
      FILE* f = std::fopen(ev_out.c_str(), "w");
      if (!f) {
        fc_report_free(report);
        std::fprintf(stderr, "error: cannot write %s\n", ev_out.c_str());
        return kExitRuntime;
      }
      std::fputs(fc_report_json(report), f);
      std::fclose(f);
    }
    fc_report_free(report);
    return kExitOk;
  }

  if (cp->parsed()) {
    char* resolved = nullptr;
    fc_status rs = fc_resolve_train_config(cp_config.c_str(), &resolved);
    if (rs != FC_OK) return fail(rs);
    nlohmann::json cfg = nlohmann::json::parse(own_string(resolved));
    echo_config({{"command", "compare"},
                 {"config", cfg},
                 {"eval_manifest", cp_eval},
                 {"methods", cp_methods},
                 {"seeds", cp_seeds},
                 {"out", cp_out},
                 {"jobs", cp_jobs}});
    fc_report* report = nullptr;
    fc_status s = fc_compare(cp_config.c_str(), cp_eval.c_str(), cp_methods.c_str(),
                             cp_seeds.c_str(), cp_out.c_str(), cp_jobs, &report);
    if (s != FC_OK) return fail(s);
    nlohmann::json j = nlohmann::json::parse(fc_report_json(report));
    for (const auto& r : j.at("results"))
      std::printf("%s seed=%llu accuracy=%.6f\n", r.at("method").get<std::string>().c_str(),
                  static_cast<unsigned long long>(r.at("seed").get<uint64_t>()),
                  r.at("accuracy").get<double>());
    std::printf("report: %s/report.json\n", cp_out.c_str());
    fc_report_free(report);
    return kExitOk;
  }

  if (ab->parsed()) {
    char* resolved = nullptr;
    fc_status rs = fc_resolve_train_config(ab_config.c_str(), &resolved);
    if (rs != FC_OK) return fail(rs);
    nlohmann::json cfg = nlohmann::json::parse(own_string(resolved));
    echo_config({{"command", "ablate"},
                 {"config", cfg},
                 {"eval_manifest", ab_eval},
                 {"counts", ab_counts},
                 {"seeds", ab_seeds},
                 {"out", ab_out},
                 {"jobs", ab_jobs}});
    fc_report* report = nullptr;
    fc_status s = fc_ablate(ab_config.c_str(), ab_eval.c_str(), ab_counts.c_str(),
                            ab_seeds.c_str(), ab_out.c_str(), ab_jobs, &report);
    if (s != FC_OK) return fail(s);
    nlohmann::json j = nlohmann::json::parse(fc_report_json(report));
    for (const auto& p : j.at("ablation_points"))
      std::printf("n=%lld seed=%llu accuracy=%.6f\n",
                  static_cast<long long>(p.at("synthetic_count").get<int64_t>()),
                  static_cast<unsigned long long>(p.at("seed").get<uint64_t>()),
                  p.at("accuracy").get<double>());
    std::printf("report: %s/report.json\n", ab_out.c_str());
    fc_report_free(report);
    return kExitOk;
  }

  if (tp->parsed()) {
    echo_config({{"command", "translate-preview"},
                 {"checkpoint", tp_ckpt},
                 {"manifest", tp_manifest},
                 {"n", tp_n},
                 {"out", tp_out}});
    fc_status s =
        fc_translate_preview(tp_ckpt.c_str(), tp_manifest.c_str(), tp_n, tp_out.c_str());
    if (s != FC_OK) return fail(s);
    std::printf("%s\n", tp_out.c_str());
    return kExitOk;
  }

  return kExitUsage;
}
