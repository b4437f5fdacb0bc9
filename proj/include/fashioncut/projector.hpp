#pragma once

#include <utility>
#include <vector>

#include "fashioncut/generator.hpp"
#include "fashioncut/nn.hpp"

namespace fashioncut {

// Index-aligned unit embeddings of patches from one (image, tap) pair.
// Query i and key i come from the same spatial location in the translated
// and input feature maps.
template <class T>
struct PatchBatch {
  int tap_id = 0;
  std::vector<std::pair<int, int>> locations;  // (row, col) on the tap grid
  Tensor<T> query_embeddings;                  // [K, E], unit rows
  Tensor<T> key_embeddings;                    // [K, E], unit rows
};

// Two-layer MLP head per encoder tap, output L2-normalized.
template <class T>
class PatchProjector {
 public:
  PatchProjector() = default;
  PatchProjector(const std::vector<int>& tap_channels, int hidden_dim, int embed_dim,
                 uint64_t init_seed)
      : embed_dim_(embed_dim) {
    Rng rng(init_seed, 0x9c0de);
    for (int ch : tap_channels) {
      Head h;
      h.fc1 = nn::Linear<T>(ch, hidden_dim);
      h.fc2 = nn::Linear<T>(hidden_dim, embed_dim);
      h.fc1.init_he(rng);
      h.fc2.init_xavier(rng);
      // a patch whose tap features are all zero (fully dead relu row) must
      // not land exactly on the normalize/relu kinks, so keep hidden biases
      // slightly active
      h.fc1.b.value.fill(T(0.02));
      heads_.push_back(std::move(h));
    }
  }

  struct Cache {
    typename nn::Linear<T>::Cache fc1, fc2;
    typename nn::LeakyRelu<T>::Cache relu;
    Tensor<T> pre_norm;             // [K, E]
    std::vector<T> inv_norm;        // per row
  };

  int num_heads() const { return static_cast<int>(heads_.size()); }
  int embed_dim() const { return embed_dim_; }

  // features: [K, C_tap] gathered rows -> [K, E] unit embeddings
  Tensor<T> project(int tap_id, const Tensor<T>& features, Cache* cache) const {
    const Head& h = heads_.at(static_cast<size_t>(tap_id));
    Tensor<T> z = h.fc1.forward(features, cache ? &cache->fc1 : nullptr);
    z = relu_.forward(z, cache ? &cache->relu : nullptr);
    z = h.fc2.forward(z, cache ? &cache->fc2 : nullptr);
    const int64_t K = z.dim(0), E = z.dim(1);
    Tensor<T> out({K, E});
    std::vector<T> inv(static_cast<size_t>(K));
    for (int64_t i = 0; i < K; ++i) {
      const T* zr = z.data() + i * E;
      T s = 0;
      for (int64_t e = 0; e < E; ++e) s += zr[e] * zr[e];
      T n = std::sqrt(s) + T(1e-10);
      inv[static_cast<size_t>(i)] = T(1) / n;
      T* orow = out.data() + i * E;
      for (int64_t e = 0; e < E; ++e) orow[e] = zr[e] / n;
    }
    if (cache) {
      cache->pre_norm = std::move(z);
      cache->inv_norm = std::move(inv);
    }
    return out;
  }

  // d(unit embeddings) -> d(gathered features); accumulates head param grads
  Tensor<T> project_backward(int tap_id, Cache& cache, const Tensor<T>& dout,
                             bool accum_param_grads = true) {
    Head& h = heads_.at(static_cast<size_t>(tap_id));
    const int64_t K = dout.dim(0), E = dout.dim(1);
    Tensor<T> dz({K, E});
    for (int64_t i = 0; i < K; ++i) {
      const T* zr = cache.pre_norm.data() + i * E;
      const T* dr = dout.data() + i * E;
      const T inv = cache.inv_norm[static_cast<size_t>(i)];
      // through y = z/|z|: dz = (d - y (y . d)) / |z|
      T dot = 0;
      for (int64_t e = 0; e < E; ++e) dot += dr[e] * zr[e] * inv;
      T* dzr = dz.data() + i * E;
      for (int64_t e = 0; e < E; ++e) dzr[e] = (dr[e] - zr[e] * inv * dot) * inv;
    }
    Tensor<T> g = h.fc2.backward(cache.fc2, dz, accum_param_grads);
    g = relu_.backward(cache.relu, g);
    return h.fc1.backward(cache.fc1, g, accum_param_grads);
  }

  void register_params(nn::ParamStore<T>& store, const std::string& prefix) {
    for (size_t i = 0; i < heads_.size(); ++i) {
      std::string p = prefix + ".head" + std::to_string(i);
      heads_[i].fc1.register_params(store, p + ".fc1");
      heads_[i].fc2.register_params(store, p + ".fc2");
    }
  }

 private:
  struct Head {
    nn::Linear<T> fc1, fc2;
  };
  std::vector<Head> heads_;
  nn::Relu<T> relu_;
  int embed_dim_ = 0;
};

// K distinct grid locations for a (image, tap) pair, deterministic in seed.
inline std::vector<std::pair<int, int>> sample_locations(int grid_h, int grid_w, int k,
                                                         uint64_t seed) {
  const int64_t total = static_cast<int64_t>(grid_h) * grid_w;
  if (k < 1) throw ParamError("num_patches must be >= 1");
  if (k > total)
    throw ParamError("num_patches " + std::to_string(k) + " exceeds grid cells " +
                     std::to_string(total));
  std::vector<int32_t> idx(static_cast<size_t>(total));
  for (int64_t i = 0; i < total; ++i) idx[static_cast<size_t>(i)] = static_cast<int32_t>(i);
  Rng rng(seed);
  std::vector<std::pair<int, int>> out;
  out.reserve(static_cast<size_t>(k));
  for (int i = 0; i < k; ++i) {
    int64_t j = i + static_cast<int64_t>(rng.next_below(static_cast<uint64_t>(total - i)));
    std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
    out.emplace_back(idx[static_cast<size_t>(i)] / grid_w, idx[static_cast<size_t>(i)] % grid_w);
  }
  return out;
}

// rows of feature map at the given locations -> [K, C]
template <class T>
Tensor<T> gather_locations(const Tensor<T>& fmap, int64_t n,
                           const std::vector<std::pair<int, int>>& locs) {
  const int64_t C = fmap.dim(3);
  Tensor<T> out({static_cast<int64_t>(locs.size()), C});
  for (size_t i = 0; i < locs.size(); ++i) {
    const T* src = fmap.pixel(n, locs[i].first, locs[i].second);
    T* dst = out.data() + static_cast<int64_t>(i) * C;
    for (int64_t c = 0; c < C; ++c) dst[c] = src[c];
  }
  return out;
}

template <class T>
void scatter_locations_add(Tensor<T>& fmap_grad, int64_t n,
                           const std::vector<std::pair<int, int>>& locs,
                           const Tensor<T>& rows) {
  const int64_t C = fmap_grad.dim(3);
  for (size_t i = 0; i < locs.size(); ++i) {
    T* dst = fmap_grad.pixel(n, locs[i].first, locs[i].second);
    const T* src = rows.data() + static_cast<int64_t>(i) * C;
    for (int64_t c = 0; c < C; ++c) dst[c] += src[c];
  }
}

// Standalone patch sampling: encodes both images, projects shared locations
// through the same heads. One PatchBatch per (image, tap), ordered by image
// then tap. Deterministic in rng_seed.
template <class T>
std::vector<PatchBatch<T>> sample_patches(const GeneratorNet<T>& g, const PatchProjector<T>& p,
                                          const Tensor<T>& input, const Tensor<T>& translated,
                                          int num_patches, uint64_t rng_seed) {
  if (!input.same_shape(translated))
    throw std::invalid_argument("sample_patches: input/translated shape mismatch");
  auto key_taps = g.encode(input, nullptr);
  auto query_taps = g.encode(translated, nullptr);
  const int64_t B = input.dim(0);
  std::vector<PatchBatch<T>> out;
  for (int64_t n = 0; n < B; ++n) {
    for (int t = 0; t < GeneratorNet<T>::kNumTaps; ++t) {
      PatchBatch<T> pb;
      pb.tap_id = t;
      pb.locations =
          sample_locations(static_cast<int>(key_taps[t].dim(1)),
                           static_cast<int>(key_taps[t].dim(2)), num_patches,
                           hash_combine(rng_seed, hash_combine(static_cast<uint64_t>(n),
                                                               static_cast<uint64_t>(t))));
      pb.key_embeddings = p.project(t, gather_locations(key_taps[t], n, pb.locations), nullptr);
      pb.query_embeddings =
          p.project(t, gather_locations(query_taps[t], n, pb.locations), nullptr);
      out.push_back(std::move(pb));
    }
  }
  return out;
}

}  // namespace fashioncut
