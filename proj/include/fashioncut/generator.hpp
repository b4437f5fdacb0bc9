#pragma once

#include <array>

#include "fashioncut/nn.hpp"

namespace fashioncut {

// Appends two normalized coordinate channels. The target style's dominant
// transform (a global lighting ramp) is position-dependent; without a
// positional signal a small fully-convolutional net cannot express it.
template <class T>
Tensor<T> with_coord_channels(const Tensor<T>& x) {
  const int64_t N = x.dim(0), H = x.dim(1), W = x.dim(2), C = x.dim(3);
  Tensor<T> out({N, H, W, C + 2});
  for (int64_t n = 0; n < N; ++n) {
    for (int64_t y = 0; y < H; ++y) {
      const T yv = static_cast<T>(2.0 * (y + 0.5) / static_cast<double>(H) - 1.0);
      for (int64_t xcol = 0; xcol < W; ++xcol) {
        const T* src = x.pixel(n, y, xcol);
        T* dst = out.pixel(n, y, xcol);
        for (int64_t c = 0; c < C; ++c) dst[c] = src[c];
        dst[C] = static_cast<T>(2.0 * (xcol + 0.5) / static_cast<double>(W) - 1.0);
        dst[C + 1] = yv;
      }
    }
  }
  return out;
}

template <class T>
Tensor<T> drop_coord_channels(const Tensor<T>& g, int64_t keep) {
  const int64_t N = g.dim(0), H = g.dim(1), W = g.dim(2), C = g.dim(3);
  Tensor<T> out({N, H, W, keep});
  for (int64_t n = 0; n < N; ++n)
    for (int64_t y = 0; y < H; ++y)
      for (int64_t xcol = 0; xcol < W; ++xcol) {
        const T* src = g.pixel(n, y, xcol);
        T* dst = out.pixel(n, y, xcol);
        for (int64_t c = 0; c < keep; ++c) dst[c] = src[c];
      }
  (void)C;
  return out;
}

// Residual encoder-decoder translator. Encoder taps (stem, mid, deepest)
// feed the patch projector; grads arriving at a tap are injected back into
// the main stream during backward.
template <class T>
class GeneratorNet {
 public:
  static constexpr int kNumTaps = 3;

  GeneratorNet() = default;
  GeneratorNet(int base_channels, int num_res_blocks, uint64_t init_seed)
      : base_(base_channels), nres_(num_res_blocks) {
    const int C = base_, C2 = 2 * base_, C4 = 4 * base_;
    stem_ = nn::Conv2d<T>(5, C, 3, 1, 1);  // rgb + coord channels
    stem_norm_ = nn::InstanceNorm2d<T>(C);
    down1_ = nn::Conv2d<T>(C, C2, 3, 2, 1);
    down1_norm_ = nn::InstanceNorm2d<T>(C2);
    down2_ = nn::Conv2d<T>(C2, C4, 3, 2, 1);
    down2_norm_ = nn::InstanceNorm2d<T>(C4);
    res_.resize(nres_);
    for (int i = 0; i < nres_; ++i) {
      res_[i].conv1 = nn::Conv2d<T>(C4, C4, 3, 1, 1);
      res_[i].norm1 = nn::InstanceNorm2d<T>(C4);
      res_[i].conv2 = nn::Conv2d<T>(C4, C4, 3, 1, 1);
      res_[i].norm2 = nn::InstanceNorm2d<T>(C4);
    }
    up1_ = nn::Conv2d<T>(C4, C2, 3, 1, 1);
    up1_norm_ = nn::InstanceNorm2d<T>(C2);
    up2_ = nn::Conv2d<T>(C2, C, 3, 1, 1);
    up2_norm_ = nn::InstanceNorm2d<T>(C);
    out_ = nn::Conv2d<T>(C, 3, 3, 1, 1);

    Rng rng(init_seed, 0xa11ce);
    stem_.init_weights(rng, 0.02);
    down1_.init_weights(rng, 0.02);
    down2_.init_weights(rng, 0.02);
    for (auto& r : res_) {
      r.conv1.init_weights(rng, 0.02);
      r.conv2.init_weights(rng, 0.02);
    }
    up1_.init_weights(rng, 0.02);
    up2_.init_weights(rng, 0.02);
    out_.init_weights(rng, 0.02);
  }

  struct EncCache {
    typename nn::Conv2d<T>::Cache c0, c1, c2;
    typename nn::InstanceNorm2d<T>::Cache n0, n1, n2;
    typename nn::LeakyRelu<T>::Cache r0, r1, r2;
  };

  struct ResCache {
    typename nn::Conv2d<T>::Cache c1, c2;
    typename nn::InstanceNorm2d<T>::Cache n1, n2;
    typename nn::LeakyRelu<T>::Cache r;
  };

  struct Cache {
    EncCache enc;
    std::array<Tensor<T>, kNumTaps> taps;
    std::vector<ResCache> res;
    typename nn::Conv2d<T>::Cache u1, u2, out;
    typename nn::InstanceNorm2d<T>::Cache un1, un2;
    typename nn::LeakyRelu<T>::Cache ur1, ur2;
    typename nn::Tanh<T>::Cache tanh;
  };

  int num_taps() const { return kNumTaps; }
  int tap_channels(int t) const { return base_ << t; }

  std::array<Tensor<T>, kNumTaps> encode(const Tensor<T>& x, EncCache* cache) const {
    check_input(x);
    std::array<Tensor<T>, kNumTaps> taps;
    Tensor<T> aug = with_coord_channels(x);
    Tensor<T> h = relu_.forward(stem_norm_.forward(stem_.forward(aug, cache ? &cache->c0 : nullptr),
                                                   cache ? &cache->n0 : nullptr),
                                cache ? &cache->r0 : nullptr);
    taps[0] = h;
    h = relu_.forward(down1_norm_.forward(down1_.forward(h, cache ? &cache->c1 : nullptr),
                                          cache ? &cache->n1 : nullptr),
                      cache ? &cache->r1 : nullptr);
    taps[1] = h;
    h = relu_.forward(down2_norm_.forward(down2_.forward(h, cache ? &cache->c2 : nullptr),
                                          cache ? &cache->n2 : nullptr),
                      cache ? &cache->r2 : nullptr);
    taps[2] = h;
    return taps;
  }

  Tensor<T> translate(const Tensor<T>& x, Cache* cache) const {
    EncCache* ec = cache ? &cache->enc : nullptr;
    std::array<Tensor<T>, kNumTaps> taps = encode(x, ec);
    Tensor<T> h = taps[2];
    if (cache) {
      cache->taps = taps;
      cache->res.resize(res_.size());
    }
    for (size_t i = 0; i < res_.size(); ++i) {
      ResCache* rc = cache ? &cache->res[i] : nullptr;
      Tensor<T> r = res_[i].conv1.forward(h, rc ? &rc->c1 : nullptr);
      r = res_[i].norm1.forward(r, rc ? &rc->n1 : nullptr);
      r = relu_.forward(r, rc ? &rc->r : nullptr);
      r = res_[i].conv2.forward(r, rc ? &rc->c2 : nullptr);
      r = res_[i].norm2.forward(r, rc ? &rc->n2 : nullptr);
      for (int64_t k = 0; k < h.numel(); ++k) h[k] += r[k];
    }
    h = up_.forward(h);
    h = relu_.forward(up1_norm_.forward(up1_.forward(h, cache ? &cache->u1 : nullptr),
                                        cache ? &cache->un1 : nullptr),
                      cache ? &cache->ur1 : nullptr);
    h = up_.forward(h);
    h = relu_.forward(up2_norm_.forward(up2_.forward(h, cache ? &cache->u2 : nullptr),
                                        cache ? &cache->un2 : nullptr),
                      cache ? &cache->ur2 : nullptr);
    h = out_.forward(h, cache ? &cache->out : nullptr);
    return tanh_.forward(h, cache ? &cache->tanh : nullptr);
  }

  // dy: grad at translate output; tap_grads: extra grads feeding each tap
  // (nullptr entries allowed). Accumulates parameter grads.
  void backward(Cache& cache, const Tensor<T>& dy,
                const std::array<const Tensor<T>*, kNumTaps>& tap_grads) {
    Tensor<T> g = tanh_.backward(cache.tanh, dy);
    g = out_.backward(cache.out, g);
    g = relu_.backward(cache.ur2, g);
    g = up2_norm_.backward(cache.un2, g);
    g = up2_.backward(cache.u2, g);
    g = up_.backward(g);
    g = relu_.backward(cache.ur1, g);
    g = up1_norm_.backward(cache.un1, g);
    g = up1_.backward(cache.u1, g);
    g = up_.backward(g);
    for (size_t i = res_.size(); i-- > 0;) {
      ResCache& rc = cache.res[i];
      Tensor<T> r = res_[i].norm2.backward(rc.n2, g);
      r = res_[i].conv2.backward(rc.c2, r);
      r = relu_.backward(rc.r, r);
      r = res_[i].norm1.backward(rc.n1, r);
      r = res_[i].conv1.backward(rc.c1, r);
      for (int64_t k = 0; k < g.numel(); ++k) g[k] += r[k];
    }
    encode_backward_from(cache.enc, &g, tap_grads);
  }

  // Backprop through the encoder alone: grads enter at the taps, the return
  // value is the grad w.r.t. the encoder input.
  Tensor<T> encode_backward(EncCache& cache,
                            const std::array<const Tensor<T>*, kNumTaps>& tap_grads) {
    return encode_backward_from(cache, nullptr, tap_grads);
  }

  void register_params(nn::ParamStore<T>& store, const std::string& prefix) {
    stem_.register_params(store, prefix + ".stem");
    stem_norm_.register_params(store, prefix + ".stem_norm");
    down1_.register_params(store, prefix + ".down1");
    down1_norm_.register_params(store, prefix + ".down1_norm");
    down2_.register_params(store, prefix + ".down2");
    down2_norm_.register_params(store, prefix + ".down2_norm");
    for (size_t i = 0; i < res_.size(); ++i) {
      std::string p = prefix + ".res" + std::to_string(i);
      res_[i].conv1.register_params(store, p + ".conv1");
      res_[i].norm1.register_params(store, p + ".norm1");
      res_[i].conv2.register_params(store, p + ".conv2");
      res_[i].norm2.register_params(store, p + ".norm2");
    }
    up1_.register_params(store, prefix + ".up1");
    up1_norm_.register_params(store, prefix + ".up1_norm");
    up2_.register_params(store, prefix + ".up2");
    up2_norm_.register_params(store, prefix + ".up2_norm");
    out_.register_params(store, prefix + ".out");
  }

  int base_channels() const { return base_; }
  int num_res_blocks() const { return nres_; }

 private:
  struct ResBlock {
    nn::Conv2d<T> conv1, conv2;
    nn::InstanceNorm2d<T> norm1, norm2;
  };

  void check_input(const Tensor<T>& x) const {
    if (x.ndim() != 4 || x.dim(3) != 3)
      throw std::invalid_argument("generator: expected NHWC input with 3 channels, got " +
                                  x.shape_str());
    if (x.dim(1) % 4 != 0 || x.dim(2) % 4 != 0)
      throw std::invalid_argument("generator: spatial dims must be divisible by 4, got " +
                                  x.shape_str());
  }

  Tensor<T> encode_backward_from(EncCache& cache, const Tensor<T>* g2_extra,
                                 const std::array<const Tensor<T>*, kNumTaps>& tap_grads) {
    // grad at tap2 (same shape as the relu input saved in r2)
    Tensor<T> g = g2_extra ? *g2_extra : Tensor<T>(cache.r2.x.shape());
    if (tap_grads[2])
      for (int64_t k = 0; k < g.numel(); ++k) g[k] += (*tap_grads[2])[k];
    g = relu_.backward(cache.r2, g);
    g = down2_norm_.backward(cache.n2, g);
    g = down2_.backward(cache.c2, g);
    if (tap_grads[1])
      for (int64_t k = 0; k < g.numel(); ++k) g[k] += (*tap_grads[1])[k];
    g = relu_.backward(cache.r1, g);
    g = down1_norm_.backward(cache.n1, g);
    g = down1_.backward(cache.c1, g);
    if (tap_grads[0])
      for (int64_t k = 0; k < g.numel(); ++k) g[k] += (*tap_grads[0])[k];
    g = relu_.backward(cache.r0, g);
    g = stem_norm_.backward(cache.n0, g);
    return drop_coord_channels(stem_.backward(cache.c0, g), 3);
  }

  int base_ = 0, nres_ = 0;
  nn::Conv2d<T> stem_, down1_, down2_, up1_, up2_, out_;
  nn::InstanceNorm2d<T> stem_norm_, down1_norm_, down2_norm_, up1_norm_, up2_norm_;
  std::vector<ResBlock> res_;
  nn::Relu<T> relu_;
  nn::Tanh<T> tanh_;
  nn::Upsample2x<T> up_;
};

}  // namespace fashioncut
