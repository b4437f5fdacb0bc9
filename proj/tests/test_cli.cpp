#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>

#include "doctest.h"
#include "fashioncut/dataset.hpp"
#include "test_util.hpp"

// Drives the installed CLI binary as a subprocess and checks the scripting
// contract: exit codes, stdout lines, and on-disk artifacts.

namespace {

struct RunResult {
  int exit_code;
  std::string out;
};

RunResult run_cli(const std::string& args) {
  std::string cmd = std::string(FC_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  while (size_t n = fread(buf, 1, sizeof(buf), pipe)) out.append(buf, n);
  int status = pclose(pipe);
  return RunResult{WEXITSTATUS(status), out};
}

std::string file_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f);
  return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("gen-data: success, determinism, validation exits") {
  testutil::TempDir dir("cli_gen");
  std::string d1 = dir.str() + "/d1", d2 = dir.str() + "/d2";
  RunResult r1 = run_cli("gen-data --out " + d1 + " --per-class 3 --seed 5 --image-size 16");
  CHECK(r1.exit_code == 0);
  CHECK(r1.out.find("effective-config:") != std::string::npos);
  CHECK(r1.out.find("manifest.csv") != std::string::npos);

  RunResult r2 = run_cli("gen-data --out " + d2 + " --per-class 3 --seed 5 --image-size 16");
  CHECK(r2.exit_code == 0);

  // identical manifests modulo path prefix (paths are relative, so identical)
  CHECK(file_bytes(d1 + "/manifest.csv") == file_bytes(d2 + "/manifest.csv"));
  // spot-check byte-identical images
  auto m = fashioncut::load_manifest(d1 + "/manifest.csv");
  for (size_t i = 0; i < m.rows.size(); i += 5)
    CHECK(file_bytes(d1 + "/" + m.rows[i].path) == file_bytes(d2 + "/" + m.rows[i].path));

  CHECK(run_cli("gen-data --out " + dir.str() + "/bad --per-class 0").exit_code == 2);
  CHECK(run_cli("gen-data --out " + dir.str() + "/bad --per-class 2 --domain nope").exit_code ==
        2);
  CHECK(run_cli("gen-data --per-class 2").exit_code == 2);  // missing required flag
  CHECK(run_cli("gen-data --out x --per-class 2 --bogus-flag 1").exit_code == 2);
  CHECK(run_cli("no-such-command").exit_code == 2);
}

TEST_CASE("train + eval + translate-preview through the CLI") {
  testutil::TempDir dir("cli_train");
  REQUIRE(run_cli("gen-data --out " + dir.str() + "/src --per-class 4 --seed 6 --image-size 16")
              .exit_code == 0);
  REQUIRE(run_cli("gen-data --out " + dir.str() +
                  "/tgt --per-class 4 --domain target --seed 7 --image-size 16")
              .exit_code == 0);

  std::string cfg_path = dir.str() + "/cfg.json";
  {
    std::ofstream f(cfg_path);
    f << R"({
  "epochs": 1,
  "batch_size": 8,
  "learning_rate": 0.001,
  "image_size": 16,
  "seed": 3,
  "source_manifest": ")" << dir.str() << R"(/src/manifest.csv",
  "target_manifest": ")" << dir.str() << R"(/tgt/manifest.csv",
  "model": {"gen_channels": 4, "gen_res_blocks": 1, "disc_channels": 4,
            "cls_channels": 4, "embed_dim": 8, "proj_hidden": 8, "num_patches": 4}
})";
  }

  RunResult tr = run_cli("train --config " + cfg_path + " --out " + dir.str() + "/run");
  CHECK(tr.exit_code == 0);
  CHECK(tr.out.find("effective-config:") != std::string::npos);
  CHECK(tr.out.find("loss_total") != std::string::npos);
  REQUIRE(std::filesystem::exists(dir.str() + "/run/epoch_1.ckpt"));
  REQUIRE(std::filesystem::exists(dir.str() + "/run/metrics.csv"));

  // epochs 1 keeps pseudo-labels off throughout
  {
    std::ifstream f(dir.str() + "/run/metrics.csv");
    std::string line;
    std::getline(f, line);  // header
    while (std::getline(f, line)) {
      CHECK(line.substr(line.size() - 2) == ",0");
    }
  }

  RunResult ev = run_cli("eval --checkpoint " + dir.str() + "/run/epoch_1.ckpt --manifest " +
                         dir.str() + "/tgt/manifest.csv");
  CHECK(ev.exit_code == 0);
  CHECK(ev.out.find("accuracy=") != std::string::npos);
  CHECK(ev.out.find("n_eval=28") != std::string::npos);

  RunResult tp = run_cli("translate-preview --checkpoint " + dir.str() +
                         "/run/epoch_1.ckpt --manifest " + dir.str() +
                         "/src/manifest.csv --n 6 --out " + dir.str() + "/grid.png");
  CHECK(tp.exit_code == 0);
  auto grid = fashioncut::read_png(dir.str() + "/grid.png");
  // 2 rows x 6 columns of 16px tiles + gutters
  CHECK(grid.height == 2 * 16 + 3 * 2);
  CHECK(grid.width == 6 * 16 + 7 * 2);

  // bad config key names the key, exit 2
  std::string bad_path = dir.str() + "/bad.json";
  {
    std::ofstream f(bad_path);
    f << "{\"learninng_rate\": 0.1}";
  }
  RunResult bad = run_cli("train --config " + bad_path + " --out " + dir.str() + "/run2");
  CHECK(bad.exit_code == 2);
  CHECK(bad.out.find("learninng_rate") != std::string::npos);

  // malformed JSON config
  std::string broken_path = dir.str() + "/broken.json";
  {
    std::ofstream f(broken_path);
    f << "{not json";
  }
  CHECK(run_cli("train --config " + broken_path + " --out " + dir.str() + "/run3").exit_code ==
        2);

  // missing checkpoint is a runtime error: exit 3
  CHECK(run_cli("eval --checkpoint " + dir.str() + "/nothere.ckpt --manifest " + dir.str() +
                "/tgt/manifest.csv")
            .exit_code == 3);
}
