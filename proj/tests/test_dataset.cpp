#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <fstream>
#include <map>

#include "doctest.h"
#include "fashioncut/dataset.hpp"
#include "test_util.hpp"

using namespace fashioncut;

template <class T>
concept HasLabels = requires(T t) { t.labels; };

TEST_CASE("generate_dataset: counts, balance, layout, manifest") {
  testutil::TempDir dir("gen");
  DatasetManifest m = generate_dataset(10, DomainStyle::source(), dir.str(), 1, 32);
  CHECK(m.rows.size() == 70);
  CHECK(m.image_size == 32);
  CHECK_NOTHROW(m.validate(true));

  std::map<int, int> per_class;
  for (const auto& r : m.rows) ++per_class[r.class_id];
  REQUIRE(per_class.size() == 7);
  for (auto& [cls, count] : per_class) CHECK(count == 10);

  // layout <class_name>/<index>.png
  CHECK(m.rows[0].path == "plain/000000.png");
  CHECK(std::filesystem::exists(dir.path() / "manifest.csv"));

  // counts scale linearly in per_class
  testutil::TempDir dir2("gen2");
  DatasetManifest m2 = generate_dataset(23, DomainStyle::source(), dir2.str(), 1, 32);
  CHECK(m2.rows.size() == 7 * 23);

  CHECK_THROWS_AS(generate_dataset(0, DomainStyle::source(), dir.str(), 1, 32), ParamError);
}

TEST_CASE("generation is deterministic and subsets are independent") {
  testutil::TempDir a("det_a"), b("det_b");
  generate_dataset(6, DomainStyle::target_default(), a.str(), 99, 32);
  generate_dataset(6, DomainStyle::target_default(), b.str(), 99, 32);

  DatasetManifest ma = load_manifest((a.path() / "manifest.csv").string());
  DatasetManifest mb = load_manifest((b.path() / "manifest.csv").string());
  REQUIRE(ma.rows.size() == mb.rows.size());
  for (size_t i = 0; i < ma.rows.size(); ++i) {
    CHECK(ma.rows[i].path == mb.rows[i].path);
    CHECK(ma.rows[i].seed == mb.rows[i].seed);
    // byte-identical images
    std::ifstream fa(ma.image_path(i), std::ios::binary);
    std::ifstream fb(mb.image_path(i), std::ios::binary);
    std::string ba((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
    std::string bb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
    REQUIRE(ba == bb);
  }

  // a smaller run reproduces a prefix of the larger run per class
  testutil::TempDir c("det_c");
  generate_dataset(3, DomainStyle::target_default(), c.str(), 99, 32);
  DatasetManifest mc = load_manifest((c.path() / "manifest.csv").string());
  for (const auto& rc : mc.rows) {
    bool found = false;
    for (size_t i = 0; i < ma.rows.size(); ++i) {
      if (ma.rows[i].path == rc.path) {
        std::ifstream fa(ma.image_path(i), std::ios::binary);
        std::ifstream fc(mc.root_dir + "/" + rc.path, std::ios::binary);
        std::string ba((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
        std::string bc((std::istreambuf_iterator<char>(fc)), std::istreambuf_iterator<char>());
        CHECK(ba == bc);
        found = true;
      }
    }
    CHECK(found);
  }
}

TEST_CASE("manifest round-trips and validation catches imbalance") {
  testutil::TempDir dir("rt");
  DatasetManifest m = generate_dataset(4, DomainStyle::source(), dir.str(), 7, 32);
  DatasetManifest loaded = load_manifest((dir.path() / "manifest.csv").string());
  REQUIRE(loaded.rows.size() == m.rows.size());
  CHECK(loaded.image_size == 32);
  CHECK(loaded.generator_version == kGeneratorVersion);
  for (size_t i = 0; i < m.rows.size(); ++i) {
    CHECK(loaded.rows[i].path == m.rows[i].path);
    CHECK(loaded.rows[i].class_id == m.rows[i].class_id);
    CHECK(loaded.rows[i].class_name == m.rows[i].class_name);
    CHECK(loaded.rows[i].domain == m.rows[i].domain);
    CHECK(loaded.rows[i].seed == m.rows[i].seed);
  }

  DatasetManifest unbalanced = loaded;
  unbalanced.rows.pop_back();
  CHECK_THROWS_AS(unbalanced.validate(false), DataError);

  DatasetManifest missing = loaded;
  missing.rows[0].path = "plain/does_not_exist.png";
  CHECK_THROWS_AS(missing.validate(true), std::exception);
}

TEST_CASE("labeled and unlabeled loaders") {
  testutil::TempDir dir("load");
  generate_dataset(3, DomainStyle::target_default(), dir.str(), 5, 32);
  std::string csv = (dir.path() / "manifest.csv").string();

  LabeledData labeled = LabeledData::load(load_manifest(csv));
  CHECK(labeled.size() == 21);
  CHECK(labeled.image_size == 32);
  std::map<int, int> counts;
  for (int y : labeled.labels) ++counts[y];
  CHECK(counts.size() == 7);

  UnlabeledData unlabeled = UnlabeledData::load_from_csv(csv);
  CHECK(unlabeled.size() == 21);
  for (size_t i = 0; i < unlabeled.size(); ++i)
    CHECK(unlabeled.images[i] == labeled.images[i]);
  // the unlabeled view carries pixels only; labels are structurally absent
  CHECK_FALSE(HasLabels<UnlabeledData>);
  CHECK(HasLabels<LabeledData>);
}

TEST_CASE("unlabeled loader ignores corrupted label columns") {
  testutil::TempDir dir("corrupt");
  generate_dataset(2, DomainStyle::target_default(), dir.str(), 6, 32);
  std::string csv = (dir.path() / "manifest.csv").string();
  UnlabeledData clean = UnlabeledData::load_from_csv(csv);

  // rewrite the manifest with garbage class ids and names
  DatasetManifest m = load_manifest(csv);
  std::ofstream f(csv, std::ios::trunc);
  f << kManifestHeader << "\n";
  for (const auto& r : m.rows)
    f << r.path << ",999,not_a_class," << domain_name(r.domain) << "," << r.seed << "\n";
  f.close();

  UnlabeledData corrupted = UnlabeledData::load_from_csv(csv);
  REQUIRE(corrupted.size() == clean.size());
  for (size_t i = 0; i < clean.size(); ++i) CHECK(corrupted.images[i] == clean.images[i]);
}

TEST_CASE("generation error names the failing path") {
  // out_dir inside a read-only location
  std::string bad = "/proc/fashioncut_cannot_write_here";
  CHECK_THROWS_AS(generate_dataset(1, DomainStyle::source(), bad, 1, 32), std::exception);
}

TEST_CASE("png round-trip is lossless") {
  Rng rng(31);
  ImageU8 img(24, 17);
  for (auto& px : img.pixels) px = static_cast<uint8_t>(rng.next_below(256));
  testutil::TempDir dir("png");
  std::string path = (dir.path() / "x.png").string();
  write_png(path, img);
  ImageU8 back = read_png(path);
  CHECK(back == img);

  // training-form round trip u8 -> [-1,1] -> u8
  Tensor<float> batch({1, 24, 17, 3});
  image_into_batch(img, batch, 0);
  for (int64_t i = 0; i < batch.numel(); ++i) {
    CHECK(batch[i] >= -1.0f);
    CHECK(batch[i] <= 1.0f);
  }
  ImageU8 again = batch_to_image(batch, 0);
  CHECK(again == img);
}
