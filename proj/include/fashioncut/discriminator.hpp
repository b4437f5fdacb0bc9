#pragma once

#include "fashioncut/generator.hpp"
#include "fashioncut/nn.hpp"

namespace fashioncut {

// Fully-convolutional patch critic: 3 stride-2 blocks + 1x1 head. Each
// output cell scores a local receptive field, never the whole image.
template <class T>
class DiscriminatorNet {
 public:
  DiscriminatorNet() = default;
  DiscriminatorNet(int base_channels, uint64_t init_seed) : base_(base_channels) {
    const int C = base_, C2 = 2 * base_, C4 = 4 * base_;
    c1_ = nn::Conv2d<T>(5, C, 3, 2, 1);  // rgb + coord channels
    c2_ = nn::Conv2d<T>(C, C2, 3, 2, 1);
    n2_ = nn::InstanceNorm2d<T>(C2);
    c3_ = nn::Conv2d<T>(C2, C4, 3, 2, 1);
    n3_ = nn::InstanceNorm2d<T>(C4);
    head_ = nn::Conv2d<T>(C4, 1, 1, 1, 0);

    Rng rng(init_seed, 0xd15c);
    c1_.init_weights(rng, 0.02);
    c2_.init_weights(rng, 0.02);
    c3_.init_weights(rng, 0.02);
    head_.init_weights(rng, 0.02);
  }

  struct Cache {
    typename nn::Conv2d<T>::Cache c1, c2, c3, head;
    typename nn::InstanceNorm2d<T>::Cache n2, n3;
    typename nn::LeakyRelu<T>::Cache r1, r2, r3;
  };

  // -> [N, H/8, W/8, 1] realism score grid
  Tensor<T> forward(const Tensor<T>& x, Cache* cache) const {
    if (x.ndim() != 4 || x.dim(3) != 3)
      throw std::invalid_argument("discriminator: expected NHWC 3-channel input, got " +
                                  x.shape_str());
    Tensor<T> aug = with_coord_channels(x);
    Tensor<T> h = lrelu_.forward(c1_.forward(aug, cache ? &cache->c1 : nullptr),
                                 cache ? &cache->r1 : nullptr);
    h = lrelu_.forward(
        n2_.forward(c2_.forward(h, cache ? &cache->c2 : nullptr), cache ? &cache->n2 : nullptr),
        cache ? &cache->r2 : nullptr);
    h = lrelu_.forward(
        n3_.forward(c3_.forward(h, cache ? &cache->c3 : nullptr), cache ? &cache->n3 : nullptr),
        cache ? &cache->r3 : nullptr);
    return head_.forward(h, cache ? &cache->head : nullptr);
  }

  // accum_param_grads=false backprops through frozen D during generator steps
  Tensor<T> backward(Cache& cache, const Tensor<T>& dy, bool accum_param_grads = true) {
    Tensor<T> g = head_.backward(cache.head, dy, accum_param_grads);
    g = lrelu_.backward(cache.r3, g);
    g = n3_.backward(cache.n3, g, accum_param_grads);
    g = c3_.backward(cache.c3, g, accum_param_grads);
    g = lrelu_.backward(cache.r2, g);
    g = n2_.backward(cache.n2, g, accum_param_grads);
    g = c2_.backward(cache.c2, g, accum_param_grads);
    g = lrelu_.backward(cache.r1, g);
    return drop_coord_channels(c1_.backward(cache.c1, g, accum_param_grads), 3);
  }

  void register_params(nn::ParamStore<T>& store, const std::string& prefix) {
    c1_.register_params(store, prefix + ".c1");
    c2_.register_params(store, prefix + ".c2");
    n2_.register_params(store, prefix + ".n2");
    c3_.register_params(store, prefix + ".c3");
    n3_.register_params(store, prefix + ".n3");
    head_.register_params(store, prefix + ".head");
  }

  // receptive field of one output cell in input pixels (three k3/s2 convs)
  static int receptive_field() { return 15; }

  int base_channels() const { return base_; }

 private:
  int base_ = 0;
  nn::Conv2d<T> c1_, c2_, c3_, head_;
  nn::InstanceNorm2d<T> n2_, n3_;
  nn::LeakyRelu<T> lrelu_{T(0.2)};
};

}  // namespace fashioncut
