#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <set>

#include "doctest.h"
#include "fashioncut/joint.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace fashioncut;

namespace {

template <class T>
Tensor<T> random_images(int64_t n, int64_t size, uint64_t seed) {
  Tensor<T> t({n, size, size, 3});
  Rng rng(seed);
  for (int64_t i = 0; i < t.numel(); ++i)
    t[i] = static_cast<T>(rng.uniform(-1.0, 1.0));
  return t;
}

ModelConfig tiny_model() {
  ModelConfig m;
  m.gen_channels = 4;
  m.gen_res_blocks = 1;
  m.disc_channels = 4;
  m.cls_channels = 4;
  m.embed_dim = 8;
  m.proj_hidden = 8;
  m.num_patches = 4;
  return m;
}

}  // namespace

TEST_CASE("translate preserves shape, bounds, and eval determinism") {
  GeneratorNet<float> g(8, 2, 77);
  Tensor<float> x = random_images<float>(3, 16, 5);
  Tensor<float> y1 = g.translate(x, nullptr);
  CHECK(y1.shape() == x.shape());
  float mx = 0;
  for (int64_t i = 0; i < y1.numel(); ++i) mx = std::max(mx, std::abs(y1[i]));
  CHECK(mx <= 1.0f);

  Tensor<float> y2 = g.translate(x, nullptr);
  for (int64_t i = 0; i < y1.numel(); ++i) REQUIRE(y1[i] == y2[i]);

  // bounds hold under absurd parameter scales (tanh clamps)
  nn::ParamStore<float> params;
  g.register_params(params, "gen");
  for (auto& p : params)
    for (int64_t i = 0; i < p.value->numel(); ++i) (*p.value)[i] *= 50.0f;
  Tensor<float> y3 = g.translate(x, nullptr);
  for (int64_t i = 0; i < y3.numel(); ++i) CHECK(std::abs(y3[i]) <= 1.0f);

  CHECK_THROWS_AS(g.translate(Tensor<float>({2, 15, 15, 3}), nullptr), std::invalid_argument);
  CHECK_THROWS_AS(g.translate(Tensor<float>({2, 16, 16, 1}), nullptr), std::invalid_argument);
}

TEST_CASE("discriminator emits a patch score grid, not a scalar") {
  DiscriminatorNet<float> d(8, 3);
  Tensor<float> x = random_images<float>(2, 32, 9);
  Tensor<float> s = d.forward(x, nullptr);
  CHECK(s.shape() == std::vector<int64_t>({2, 4, 4, 1}));
  CHECK(s.dim(1) * s.dim(2) > 1);
  // each cell sees a strict subset of the image
  CHECK(DiscriminatorNet<float>::receptive_field() < 32);
}

TEST_CASE("projector embeddings are unit norm") {
  PatchProjector<float> p({4, 8, 16}, 16, 8, 11);
  Rng rng(13);
  for (int tap = 0; tap < 3; ++tap) {
    const int ch = 4 << tap;
    Tensor<float> feats({10, ch});
    for (int64_t i = 0; i < feats.numel(); ++i) feats[i] = static_cast<float>(rng.normal());
    Tensor<float> emb = p.project(tap, feats, nullptr);
    for (int64_t i = 0; i < 10; ++i) {
      double norm = 0;
      for (int64_t e = 0; e < 8; ++e) norm += emb[i * 8 + e] * emb[i * 8 + e];
      CHECK(std::abs(std::sqrt(norm) - 1.0) < 1e-5);
    }
  }
}

TEST_CASE("sample_patches: shared distinct locations, determinism, identity case") {
  GeneratorNet<float> g(4, 1, 21);
  PatchProjector<float> p({4, 8, 16}, 8, 8, 22);
  Tensor<float> input = random_images<float>(2, 16, 23);
  Tensor<float> translated = g.translate(input, nullptr);

  auto batches = sample_patches(g, p, input, translated, 6, 31);
  REQUIRE(batches.size() == 2 * 3);
  for (const auto& pb : batches) {
    CHECK(pb.locations.size() == 6);
    std::set<std::pair<int, int>> uniq(pb.locations.begin(), pb.locations.end());
    CHECK(uniq.size() == 6);  // without replacement
    const int grid = 16 >> pb.tap_id;
    for (auto [r, c] : pb.locations) {
      CHECK(r >= 0);
      CHECK(r < grid);
      CHECK(c >= 0);
      CHECK(c < grid);
    }
    CHECK(pb.query_embeddings.shape() == std::vector<int64_t>({6, 8}));
    CHECK(pb.key_embeddings.shape() == std::vector<int64_t>({6, 8}));
  }

  auto batches2 = sample_patches(g, p, input, translated, 6, 31);
  for (size_t i = 0; i < batches.size(); ++i)
    CHECK(batches[i].locations == batches2[i].locations);
  auto batches3 = sample_patches(g, p, input, translated, 6, 32);
  bool all_same = true;
  for (size_t i = 0; i < batches.size(); ++i)
    if (batches[i].locations != batches3[i].locations) all_same = false;
  CHECK_FALSE(all_same);

  // identity pairing: same image on both sides -> query == key exactly
  auto idbatches = sample_patches(g, p, input, input, 6, 33);
  for (const auto& pb : idbatches)
    for (int64_t i = 0; i < pb.query_embeddings.numel(); ++i)
      CHECK(pb.query_embeddings[i] == pb.key_embeddings[i]);

  // more patches than grid cells at the deepest tap (4x4=16)
  CHECK_THROWS_AS(sample_patches(g, p, input, translated, 17, 31), ParamError);
}

TEST_CASE("gan_loss convenience wrapper equals term composition and oracle") {
  DiscriminatorNet<double> d(4, 41);
  Tensor<double> real = random_images<double>(2, 16, 43);
  Tensor<double> fake = random_images<double>(2, 16, 47);
  auto [gen_term, disc_term] = gan_loss(d, real, fake);
  Tensor<double> d_real = d.forward(real, nullptr);
  Tensor<double> d_fake = d.forward(fake, nullptr);
  CHECK(testutil::rel_err(gen_term, oracle::lsgan_gen_loop(d_fake)) < 1e-6);
  CHECK(testutil::rel_err(disc_term, oracle::lsgan_disc_loop(d_real, d_fake)) < 1e-6);
  CHECK(gen_term >= 0.0);
  CHECK(disc_term >= 0.0);
}

TEST_CASE("nce_identity_loss: determinism and near-zero under an identity map") {
  GeneratorNet<double> g(4, 1, 51);
  PatchProjector<double> p({4, 8, 16}, 8, 8, 52);
  Tensor<double> real = random_images<double>(2, 16, 53);
  double a = nce_identity_loss(g, p, real, 5, 0.07, 61);
  double b = nce_identity_loss(g, p, real, 5, 0.07, 61);
  CHECK(a == b);

  // translated == input: query_i == key_i exactly, so the positive holds the
  // top logit for every query -> loss strictly below the uniform bound ln K,
  // and the value must agree with the loop oracle on the aligned embeddings
  auto batches = sample_patches(g, p, real, real, 8, 62);
  for (const auto& pb : batches) {
    double v = nce_loss(pb, 0.07);
    CHECK(v < std::log(8.0));
    CHECK(testutil::rel_err(v, oracle::nce_loop(pb.query_embeddings, pb.key_embeddings, 0.07)) <
          1e-6);
  }
}

TEST_CASE("one generator, one discriminator in the joint model") {
  JointModel<float> joint(tiny_model(), 71);
  nn::ParamStore<float> all = joint.all_params();
  int gen_stems = 0, disc_heads = 0;
  for (const auto& p : all) {
    if (p.name == "gen.stem.w") ++gen_stems;
    if (p.name == "disc.head.w") ++disc_heads;
  }
  CHECK(gen_stems == 1);
  CHECK(disc_heads == 1);
}

TEST_CASE("full-path gradients of every objective term") {
  // miniature configuration in double; the classifier and patch terms run on
  // 8x8 images. The adversarial terms use 16x16: the patch critic downsamples
  // 8x8 to a single cell whose instance norm is degenerate (constant output,
  // legitimately zero gradient everywhere), which would make the check vacuous.
  JointModel<double> joint(tiny_model(), 101);
  Tensor<double> synth8 = random_images<double>(2, 8, 103);
  Tensor<double> real8 = random_images<double>(2, 8, 107);
  Tensor<double> synth16 = random_images<double>(2, 16, 109);
  Tensor<double> real16 = random_images<double>(2, 16, 113);
  ComposedClassifierBatch<double> cls_batch;
  cls_batch.synth_rows = {0, 1};
  cls_batch.synth_labels = {2, 5};

  nn::ParamStore<double> gen_params = joint.generator_group();

  auto check_term = [&](LossWeights w, const Tensor<double>& synth, const Tensor<double>& real,
                        uint64_t probe_seed) {
    auto eval = [&] {
      return joint.generator_objective(synth, real, cls_batch, w, 777, false).total;
    };
    auto compute = [&] { joint.generator_objective(synth, real, cls_batch, w, 777, true); };
    auto probes = testutil::gradcheck_probes(gen_params, eval, compute, 20, probe_seed, 3e-6, 1e-4);
    REQUIRE(probes.size() >= 20);
    for (const auto& p : probes) {
      INFO(p.param_name, "[", p.index, "] analytic=", p.analytic, " numeric=", p.numeric);
      CHECK(p.rel < 1e-6);
    }
  };

  check_term(LossWeights{1.0, 0.0, 0.0, 0.0, 0.07}, synth16, real16, 1);
  check_term(LossWeights{0.0, 1.0, 0.0, 0.0, 0.07}, synth8, real8, 2);
  check_term(LossWeights{0.0, 0.0, 1.0, 0.0, 0.07}, synth8, real8, 3);
  check_term(LossWeights{0.0, 0.0, 0.0, 1.0, 0.07}, synth8, real8, 4);

  // discriminator objective gradients
  nn::ParamStore<double> disc_params = joint.discriminator_group();
  auto eval_d = [&] {
    return static_cast<double>(joint.discriminator_objective(synth16, real16, false));
  };
  auto compute_d = [&] { joint.discriminator_objective(synth16, real16, true); };
  auto probes = testutil::gradcheck_probes(disc_params, eval_d, compute_d, 20, 5, 3e-6, 1e-4);
  REQUIRE(probes.size() >= 20);
  for (const auto& p : probes) {
    INFO(p.param_name, "[", p.index, "] analytic=", p.analytic, " numeric=", p.numeric);
    CHECK(p.rel < 1e-6);
  }
}
