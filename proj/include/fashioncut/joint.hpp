#pragma once

#include <array>
#include <optional>
#include <vector>

#include "fashioncut/classifier.hpp"
#include "fashioncut/config.hpp"
#include "fashioncut/discriminator.hpp"
#include "fashioncut/generator.hpp"
#include "fashioncut/losses.hpp"
#include "fashioncut/projector.hpp"

namespace fashioncut {

struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Unweighted values of each objective term for one step.
struct LossBreakdown {
  double total = 0;  // weighted sum
  double gan = 0;
  double cls = 0;
  double ncex = 0;
  double ncey = 0;
};

// Classifier mini-batch after pseudo-label mixing. synth_rows index into the
// translated synthetic batch; real rows carry their own images.
template <class T>
struct ComposedClassifierBatch {
  std::vector<int> synth_rows;
  std::vector<int> synth_labels;
  Tensor<T> real_images;          // [P, H, W, 3]; empty when no pseudo rows
  std::vector<int> real_labels;   // pseudo-labels for real rows

  int64_t size() const {
    return static_cast<int64_t>(synth_rows.size()) + static_cast<int64_t>(real_labels.size());
  }
  int64_t pseudo_rows() const { return static_cast<int64_t>(real_labels.size()); }
};

// The jointly trained stack: one generator, one discriminator, the patch
// projector heads, and the classifier.
template <class T>
struct JointModel {
  GeneratorNet<T> generator;
  DiscriminatorNet<T> discriminator;
  PatchProjector<T> projector;
  ClassifierNet<T> classifier;
  ModelConfig cfg;

  JointModel(const ModelConfig& mc, uint64_t init_seed)
      : generator(mc.gen_channels, mc.gen_res_blocks, init_seed),
        discriminator(mc.disc_channels, hash_combine(init_seed, 2)),
        projector({mc.gen_channels, 2 * mc.gen_channels, 4 * mc.gen_channels}, mc.proj_hidden,
                  mc.embed_dim, hash_combine(init_seed, 3)),
        classifier(mc.cls_channels, mc.cls_blocks_per_stage, hash_combine(init_seed, 4)),
        cfg(mc) {}

  // generator + projector + classifier: the groups updated by a generator step
  nn::ParamStore<T> generator_group() {
    nn::ParamStore<T> s;
    generator.register_params(s, "gen");
    projector.register_params(s, "proj");
    classifier.register_params(s, "cls");
    return s;
  }

  nn::ParamStore<T> discriminator_group() {
    nn::ParamStore<T> s;
    discriminator.register_params(s, "disc");
    return s;
  }

  nn::ParamStore<T> all_params() {
    nn::ParamStore<T> s = generator_group();
    discriminator.register_params(s, "disc");
    return s;
  }

  // --- full generator-side objective -------------------------------------
  // Computes the weighted objective
  //   lambda_g * gan + lambda_c * cls + lambda_ncex * ncex + lambda_ncey * ncey
  // and, when backprop is set, accumulates grads into generator, projector
  // and classifier parameters (discriminator frozen). Terms with zero weight
  // are skipped and reported as 0.
  LossBreakdown generator_objective(const Tensor<T>& synthetic, const Tensor<T>& real,
                                    const ComposedClassifierBatch<T>& cls_batch,
                                    const LossWeights& w, uint64_t patch_seed, bool backprop) {
    LossBreakdown out;
    const int64_t B = synthetic.dim(0);
    const T lam_g = static_cast<T>(w.lambda_g), lam_c = static_cast<T>(w.lambda_c);
    const T lam_x = static_cast<T>(w.lambda_ncex), lam_y = static_cast<T>(w.lambda_ncey);
    const T tau = static_cast<T>(w.temperature);

    const bool need_synth_path = w.lambda_g > 0 || w.lambda_c > 0 || w.lambda_ncex > 0;

    // -- synthetic path: translate once, share across gan/cls/ncex
    typename GeneratorNet<T>::Cache synth_cache;
    Tensor<T> translated;
    if (need_synth_path)
      translated = generator.translate(synthetic, backprop ? &synth_cache : nullptr);

    Tensor<T> d_translated_grad;  // accumulated dL/d(translated), weighted
    if (backprop && need_synth_path) d_translated_grad = Tensor<T>(translated.shape());
    std::array<Tensor<T>, 3> synth_tap_grads;
    std::array<const Tensor<T>*, 3> synth_tap_grad_ptrs{nullptr, nullptr, nullptr};

    // GAN generator term
    if (w.lambda_g > 0) {
      typename DiscriminatorNet<T>::Cache dcache;
      Tensor<T> scores = discriminator.forward(translated, backprop ? &dcache : nullptr);
      ScalarGrad<T> g = lsgan_generator_term(scores);
      out.gan = static_cast<double>(g.value);
      if (backprop) {
        for (int64_t i = 0; i < g.grad.numel(); ++i) g.grad[i] *= lam_g;
        Tensor<T> dimg = discriminator.backward(dcache, g.grad, /*accum_param_grads=*/false);
        for (int64_t i = 0; i < d_translated_grad.numel(); ++i) d_translated_grad[i] += dimg[i];
      }
    }

    // classifier term on the composed batch
    if (w.lambda_c > 0 && cls_batch.size() > 0) {
      const int64_t H = synthetic.dim(1), W = synthetic.dim(2);
      const int64_t S = static_cast<int64_t>(cls_batch.synth_rows.size());
      const int64_t P = cls_batch.pseudo_rows();
      Tensor<T> images({S + P, H, W, 3});
      std::vector<int> labels(static_cast<size_t>(S + P));
      for (int64_t i = 0; i < S; ++i) {
        const int row = cls_batch.synth_rows[static_cast<size_t>(i)];
        std::copy(translated.pixel(row, 0, 0), translated.pixel(row, 0, 0) + H * W * 3,
                  images.pixel(i, 0, 0));
        labels[static_cast<size_t>(i)] = cls_batch.synth_labels[static_cast<size_t>(i)];
      }
      for (int64_t i = 0; i < P; ++i) {
        std::copy(cls_batch.real_images.pixel(i, 0, 0),
                  cls_batch.real_images.pixel(i, 0, 0) + H * W * 3, images.pixel(S + i, 0, 0));
        labels[static_cast<size_t>(S + i)] = cls_batch.real_labels[static_cast<size_t>(i)];
      }
      typename ClassifierNet<T>::Cache ccache;
      Tensor<T> logits = classifier.forward(images, backprop ? &ccache : nullptr);
      XentGrad<T> xg = xent_loss_grad(logits, labels);
      out.cls = static_cast<double>(xg.value);
      if (backprop) {
        for (int64_t i = 0; i < xg.dlogits.numel(); ++i) xg.dlogits[i] *= lam_c;
        Tensor<T> dimages = classifier.backward(ccache, xg.dlogits);
        // translated rows feed gradient back into the generator
        for (int64_t i = 0; i < S; ++i) {
          const int row = cls_batch.synth_rows[static_cast<size_t>(i)];
          const T* src = dimages.pixel(i, 0, 0);
          T* dst = d_translated_grad.pixel(row, 0, 0);
          for (int64_t k = 0; k < H * W * 3; ++k) dst[k] += src[k];
        }
      }
    }

    // NCE consistency on the synthetic->translated pair
    if (w.lambda_ncex > 0) {
      if (backprop) {
        typename GeneratorNet<T>::EncCache query_enc;
        auto query_taps = generator.encode(translated, &query_enc);
        std::array<Tensor<T>, 3> query_tap_grads;
        out.ncex = patch_nce(&synth_cache.taps, query_taps, B, tau, lam_x,
                             hash_combine(patch_seed, 0xce1), true, &synth_tap_grads,
                             &query_tap_grads);
        std::array<const Tensor<T>*, 3> qptrs{&query_tap_grads[0], &query_tap_grads[1],
                                              &query_tap_grads[2]};
        Tensor<T> dtq = generator.encode_backward(query_enc, qptrs);
        for (int64_t i = 0; i < d_translated_grad.numel(); ++i) d_translated_grad[i] += dtq[i];
        for (int t = 0; t < 3; ++t) synth_tap_grad_ptrs[t] = &synth_tap_grads[t];
      } else {
        auto key_taps = generator.encode(synthetic, nullptr);
        auto query_taps = generator.encode(translated, nullptr);
        out.ncex = patch_nce_values(key_taps, query_taps, B, tau, hash_combine(patch_seed, 0xce1));
      }
    }

    if (backprop && need_synth_path)
      generator.backward(synth_cache, d_translated_grad, synth_tap_grad_ptrs);

    // NCE identity on the real batch
    if (w.lambda_ncey > 0) {
      if (backprop) {
        typename GeneratorNet<T>::Cache real_cache;
        Tensor<T> real_translated = generator.translate(real, &real_cache);
        typename GeneratorNet<T>::EncCache query_enc;
        auto query_taps = generator.encode(real_translated, &query_enc);
        std::array<Tensor<T>, 3> key_tap_grads, query_tap_grads;
        out.ncey = patch_nce(&real_cache.taps, query_taps, real.dim(0), tau, lam_y,
                             hash_combine(patch_seed, 0xce2), true, &key_tap_grads,
                             &query_tap_grads);
        std::array<const Tensor<T>*, 3> qptrs{&query_tap_grads[0], &query_tap_grads[1],
                                              &query_tap_grads[2]};
        Tensor<T> dout = generator.encode_backward(query_enc, qptrs);
        std::array<const Tensor<T>*, 3> kptrs{&key_tap_grads[0], &key_tap_grads[1],
                                              &key_tap_grads[2]};
        generator.backward(real_cache, dout, kptrs);
      } else {
        Tensor<T> real_translated = generator.translate(real, nullptr);
        auto key_taps = generator.encode(real, nullptr);
        auto query_taps = generator.encode(real_translated, nullptr);
        out.ncey = patch_nce_values(key_taps, query_taps, real.dim(0), tau,
                                    hash_combine(patch_seed, 0xce2));
      }
    }

    out.total = w.lambda_g * out.gan + w.lambda_c * out.cls + w.lambda_ncex * out.ncex +
                w.lambda_ncey * out.ncey;
    check_finite(out);
    return out;
  }

  // --- discriminator objective --------------------------------------------
  // fake images are translated detached from the generator.
  T discriminator_objective(const Tensor<T>& synthetic, const Tensor<T>& real, bool backprop) {
    Tensor<T> fake = generator.translate(synthetic, nullptr);
    typename DiscriminatorNet<T>::Cache creal, cfake;
    Tensor<T> d_real = discriminator.forward(real, backprop ? &creal : nullptr);
    Tensor<T> d_fake = discriminator.forward(fake, backprop ? &cfake : nullptr);
    DiscLossGrad<T> g = lsgan_discriminator_term(d_real, d_fake);
    if (!std::isfinite(static_cast<double>(g.value)))
      throw TrainingError("non-finite loss in term: disc");
    if (backprop) {
      discriminator.backward(creal, g.grad_real, true);
      discriminator.backward(cfake, g.grad_fake, true);
    }
    return g.value;
  }

 private:
  static void check_finite(const LossBreakdown& b) {
    auto bad = [](double v) { return !std::isfinite(v); };
    if (bad(b.gan)) throw TrainingError("non-finite loss in term: gan");
    if (bad(b.cls)) throw TrainingError("non-finite loss in term: cls");
    if (bad(b.ncex)) throw TrainingError("non-finite loss in term: ncex");
    if (bad(b.ncey)) throw TrainingError("non-finite loss in term: ncey");
    if (bad(b.total)) throw TrainingError("non-finite loss in term: total");
  }

  // Mean patch-NCE over (image, tap) pairs; optionally backprops through the
  // projector, scattering scaled grads into per-tap grad tensors.
  double patch_nce(const std::array<Tensor<T>, 3>* key_taps,
                   const std::array<Tensor<T>, 3>& query_taps, int64_t batch, T tau, T weight,
                   uint64_t seed, bool backprop, std::array<Tensor<T>, 3>* key_tap_grads,
                   std::array<Tensor<T>, 3>* query_tap_grads) {
    const int K = cfg.num_patches;
    const int num_taps = 3;
    if (backprop) {
      for (int t = 0; t < num_taps; ++t) {
        (*key_tap_grads)[t] = Tensor<T>((*key_taps)[t].shape());
        (*query_tap_grads)[t] = Tensor<T>(query_taps[t].shape());
      }
    }
    double total = 0;
    const T pair_scale = weight / static_cast<T>(batch * num_taps);
    for (int64_t n = 0; n < batch; ++n) {
      for (int t = 0; t < num_taps; ++t) {
        auto locs = sample_locations(static_cast<int>(query_taps[t].dim(1)),
                                     static_cast<int>(query_taps[t].dim(2)), K,
                                     hash_combine(seed, hash_combine(static_cast<uint64_t>(n),
                                                                     static_cast<uint64_t>(t))));
        typename PatchProjector<T>::Cache kc, qc;
        Tensor<T> keys = projector.project(t, gather_locations((*key_taps)[t], n, locs),
                                           backprop ? &kc : nullptr);
        Tensor<T> queries = projector.project(t, gather_locations(query_taps[t], n, locs),
                                              backprop ? &qc : nullptr);
        NceGrad<T> res = nce_loss_grad(queries, keys, tau);
        total += static_cast<double>(res.value);
        if (backprop) {
          for (int64_t i = 0; i < res.dquery.numel(); ++i) res.dquery[i] *= pair_scale;
          for (int64_t i = 0; i < res.dkey.numel(); ++i) res.dkey[i] *= pair_scale;
          Tensor<T> dq_feat = projector.project_backward(t, qc, res.dquery);
          Tensor<T> dk_feat = projector.project_backward(t, kc, res.dkey);
          scatter_locations_add((*query_tap_grads)[t], n, locs, dq_feat);
          scatter_locations_add((*key_tap_grads)[t], n, locs, dk_feat);
        }
      }
    }
    return total / static_cast<double>(batch * num_taps);
  }

  // forward-only variant used when grads are not needed
  double patch_nce_values(const std::array<Tensor<T>, 3>& key_taps,
                          const std::array<Tensor<T>, 3>& query_taps, int64_t batch, T tau,
                          uint64_t seed) {
    const int K = cfg.num_patches;
    double total = 0;
    for (int64_t n = 0; n < batch; ++n) {
      for (int t = 0; t < 3; ++t) {
        auto locs = sample_locations(static_cast<int>(query_taps[t].dim(1)),
                                     static_cast<int>(query_taps[t].dim(2)), K,
                                     hash_combine(seed, hash_combine(static_cast<uint64_t>(n),
                                                                     static_cast<uint64_t>(t))));
        Tensor<T> keys = projector.project(t, gather_locations(key_taps[t], n, locs), nullptr);
        Tensor<T> queries = projector.project(t, gather_locations(query_taps[t], n, locs), nullptr);
        total += static_cast<double>(nce_loss_grad(queries, keys, tau).value);
      }
    }
    return total / static_cast<double>(batch * 3);
  }
};

}  // namespace fashioncut
