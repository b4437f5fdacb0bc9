#pragma once

#include <limits>
#include <vector>

#include "fashioncut/classifier.hpp"
#include "fashioncut/discriminator.hpp"
#include "fashioncut/projector.hpp"
#include "fashioncut/tensor.hpp"

namespace fashioncut {

// ---------------------------------------------------------------------------
// Least-squares adversarial terms over patch score grids.

template <class T>
struct ScalarGrad {
  T value = 0;
  Tensor<T> grad;
};

// generator side: mean[(d(fake) - 1)^2]
template <class T>
ScalarGrad<T> lsgan_generator_term(const Tensor<T>& d_fake) {
  ScalarGrad<T> out;
  out.grad = Tensor<T>(d_fake.shape());
  const int64_t M = d_fake.numel();
  double acc = 0;
  for (int64_t i = 0; i < M; ++i) {
    const T d = d_fake[i] - T(1);
    acc += static_cast<double>(d) * static_cast<double>(d);
    out.grad[i] = T(2) * d / T(M);
  }
  out.value = static_cast<T>(acc / static_cast<double>(M));
  return out;
}

// critic side: 0.5*mean[(d(real) - 1)^2] + 0.5*mean[d(fake)^2]
template <class T>
struct DiscLossGrad {
  T value = 0;
  Tensor<T> grad_real, grad_fake;
};

template <class T>
DiscLossGrad<T> lsgan_discriminator_term(const Tensor<T>& d_real, const Tensor<T>& d_fake) {
  DiscLossGrad<T> out;
  out.grad_real = Tensor<T>(d_real.shape());
  out.grad_fake = Tensor<T>(d_fake.shape());
  const int64_t Mr = d_real.numel(), Mf = d_fake.numel();
  double acc = 0;
  for (int64_t i = 0; i < Mr; ++i) {
    const T d = d_real[i] - T(1);
    acc += 0.5 * static_cast<double>(d) * static_cast<double>(d) / static_cast<double>(Mr);
    out.grad_real[i] = d / T(Mr);
  }
  for (int64_t i = 0; i < Mf; ++i) {
    const T d = d_fake[i];
    acc += 0.5 * static_cast<double>(d) * static_cast<double>(d) / static_cast<double>(Mf);
    out.grad_fake[i] = d / T(Mf);
  }
  out.value = static_cast<T>(acc);
  return out;
}

// Convenience evaluator matching the module surface: runs the critic on both
// batches and reports (generator term, critic term).
template <class T>
std::pair<T, T> gan_loss(const DiscriminatorNet<T>& d, const Tensor<T>& real,
                         const Tensor<T>& fake) {
  Tensor<T> d_real = d.forward(real, nullptr);
  Tensor<T> d_fake = d.forward(fake, nullptr);
  T gen = lsgan_generator_term(d_fake).value;
  T disc = lsgan_discriminator_term(d_real, d_fake).value;
  return {gen, disc};
}

// ---------------------------------------------------------------------------
// Patchwise InfoNCE. Key i is the positive for query i; all other keys of
// the same patch batch are negatives.

template <class T>
struct NceGrad {
  T value = 0;
  Tensor<T> dquery, dkey;  // [K, E]
};

template <class T>
NceGrad<T> nce_loss_grad(const Tensor<T>& queries, const Tensor<T>& keys, T temperature) {
  if (temperature <= T(0)) throw ParamError("temperature must be > 0");
  const int64_t K = queries.dim(0), E = queries.dim(1);
  if (K < 2) throw ParamError("nce_loss needs at least 2 patches (no negatives otherwise)");
  if (keys.dim(0) != K || keys.dim(1) != E)
    throw std::invalid_argument("nce_loss: query/key shape mismatch");

  NceGrad<T> out;
  out.dquery = Tensor<T>({K, E});
  out.dkey = Tensor<T>({K, E});
  std::vector<T> logits(static_cast<size_t>(K));
  std::vector<T> probs(static_cast<size_t>(K));
  double total = 0;
  const T inv_tau = T(1) / temperature;

  for (int64_t i = 0; i < K; ++i) {
    const T* q = queries.data() + i * E;
    T mx = -std::numeric_limits<T>::infinity();
    for (int64_t j = 0; j < K; ++j) {
      const T* k = keys.data() + j * E;
      T dot = 0;
      for (int64_t e = 0; e < E; ++e) dot += q[e] * k[e];
      logits[static_cast<size_t>(j)] = dot * inv_tau;
      mx = std::max(mx, logits[static_cast<size_t>(j)]);
    }
    T sum = 0;
    for (int64_t j = 0; j < K; ++j) {
      probs[static_cast<size_t>(j)] = std::exp(logits[static_cast<size_t>(j)] - mx);
      sum += probs[static_cast<size_t>(j)];
    }
    const T log_denom = std::log(sum) + mx;
    total += static_cast<double>(log_denom - logits[static_cast<size_t>(i)]);

    // dlogit_j = (p_j - [j==i]) / K
    T* dq = out.dquery.data() + i * E;
    for (int64_t j = 0; j < K; ++j) {
      T dl = (probs[static_cast<size_t>(j)] / sum - (j == i ? T(1) : T(0))) / T(K);
      const T* k = keys.data() + j * E;
      T* dk = out.dkey.data() + j * E;
      const T w = dl * inv_tau;
      for (int64_t e = 0; e < E; ++e) {
        dq[e] += w * k[e];
        dk[e] += w * q[e];
      }
    }
  }
  out.value = static_cast<T>(total / static_cast<double>(K));
  return out;
}

// Module-surface form over a PatchBatch.
template <class T>
T nce_loss(const PatchBatch<T>& patches, T temperature) {
  return nce_loss_grad(patches.query_embeddings, patches.key_embeddings, temperature).value;
}

// Identity-preservation term: patches drawn from (real, translate(real)).
template <class T>
T nce_identity_loss(const GeneratorNet<T>& g, const PatchProjector<T>& p, const Tensor<T>& real,
                    int num_patches, T temperature, uint64_t rng_seed) {
  Tensor<T> translated = g.translate(real, nullptr);
  auto batches = sample_patches(g, p, real, translated, num_patches, rng_seed);
  double total = 0;
  for (const auto& pb : batches) total += static_cast<double>(nce_loss(pb, temperature));
  return static_cast<T>(total / static_cast<double>(batches.size()));
}

// ---------------------------------------------------------------------------
// Softmax cross-entropy over class logits.

template <class T>
struct XentGrad {
  T value = 0;
  Tensor<T> dlogits;  // [B, C]
};

template <class T>
XentGrad<T> xent_loss_grad(const Tensor<T>& logits, const std::vector<int>& labels) {
  const int64_t B = logits.dim(0), C = logits.dim(1);
  if (static_cast<int64_t>(labels.size()) != B)
    throw std::invalid_argument("xent: label count mismatch");
  XentGrad<T> out;
  out.dlogits = Tensor<T>({B, C});
  double total = 0;
  for (int64_t i = 0; i < B; ++i) {
    const int y = labels[static_cast<size_t>(i)];
    if (y < 0 || y >= C)
      throw std::invalid_argument("xent: label out of range: " + std::to_string(y));
    const T* row = logits.data() + i * C;
    T mx = row[0];
    for (int64_t c = 1; c < C; ++c) mx = std::max(mx, row[c]);
    T sum = 0;
    for (int64_t c = 0; c < C; ++c) sum += std::exp(row[c] - mx);
    const T log_denom = std::log(sum) + mx;
    total += static_cast<double>(log_denom - row[y]);
    T* drow = out.dlogits.data() + i * C;
    for (int64_t c = 0; c < C; ++c) {
      T p = std::exp(row[c] - log_denom);
      drow[c] = (p - (c == y ? T(1) : T(0))) / T(B);
    }
  }
  out.value = static_cast<T>(total / static_cast<double>(B));
  return out;
}

template <class T>
T xent_loss(const Prediction<T>& pred, const std::vector<int>& labels) {
  return xent_loss_grad(pred.logits, labels).value;
}

}  // namespace fashioncut
