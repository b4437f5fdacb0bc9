#pragma once

#include <vector>

#include "fashioncut/nn.hpp"
#include "fashioncut/pattern.hpp"

namespace fashioncut {

// Small residual classifier: stem + 4 stages (identity, then 3 downsampling
// with doubling width), global average pool, linear head to 7 logits.
// blocks_per_stage scales depth if a bigger backbone is wanted.
template <class T>
class ClassifierNet {
 public:
  ClassifierNet() = default;
  ClassifierNet(int base_channels, int blocks_per_stage, uint64_t init_seed)
      : base_(base_channels), blocks_per_stage_(blocks_per_stage) {
    Rng rng(init_seed, 0xc1a55);
    stem_ = nn::Conv2d<T>(3, base_, 3, 1, 1);
    stem_.init_he(rng);
    stem_norm_ = nn::InstanceNorm2d<T>(base_);

    int ch = base_;
    for (int s = 0; s < 4; ++s) {
      int out_ch = s == 0 ? ch : ch * 2;
      int stride = s == 0 ? 1 : 2;
      for (int b = 0; b < blocks_per_stage_; ++b) {
        Block blk;
        int in_ch = b == 0 ? ch : out_ch;
        int st = b == 0 ? stride : 1;
        blk.conv1 = nn::Conv2d<T>(in_ch, out_ch, 3, st, 1);
        blk.norm1 = nn::InstanceNorm2d<T>(out_ch);
        blk.conv2 = nn::Conv2d<T>(out_ch, out_ch, 3, 1, 1);
        blk.norm2 = nn::InstanceNorm2d<T>(out_ch);
        blk.project = (in_ch != out_ch || st != 1);
        if (blk.project) {
          blk.skip = nn::Conv2d<T>(in_ch, out_ch, 1, st, 0);
          blk.skip.init_he(rng);
        }
        blk.conv1.init_he(rng);
        blk.conv2.init_he(rng);
        blocks_.push_back(std::move(blk));
      }
      ch = out_ch;
    }
    head_ = nn::Linear<T>(ch, kNumClasses);
    head_.init_xavier(rng);
  }

  struct BlockCache {
    typename nn::Conv2d<T>::Cache c1, c2, skip;
    typename nn::InstanceNorm2d<T>::Cache n1, n2;
    typename nn::LeakyRelu<T>::Cache r1, r2;
  };

  struct Cache {
    typename nn::Conv2d<T>::Cache stem;
    typename nn::InstanceNorm2d<T>::Cache stem_norm;
    typename nn::LeakyRelu<T>::Cache stem_relu;
    std::vector<BlockCache> blocks;
    typename nn::GlobalAvgPool<T>::Cache pool;
    typename nn::Linear<T>::Cache head;
  };

  // logits [B, 7]
  Tensor<T> forward(const Tensor<T>& x, Cache* cache) const {
    if (x.ndim() != 4 || x.dim(3) != 3)
      throw std::invalid_argument("classifier: expected NHWC 3-channel input, got " +
                                  x.shape_str());
    if (cache) cache->blocks.resize(blocks_.size());
    Tensor<T> h = relu_.forward(
        stem_norm_.forward(stem_.forward(x, cache ? &cache->stem : nullptr),
                           cache ? &cache->stem_norm : nullptr),
        cache ? &cache->stem_relu : nullptr);
    for (size_t i = 0; i < blocks_.size(); ++i) {
      BlockCache* bc = cache ? &cache->blocks[i] : nullptr;
      h = block_forward(blocks_[i], h, bc);
    }
    Tensor<T> pooled = pool_.forward(h, cache ? &cache->pool : nullptr);
    return head_.forward(pooled, cache ? &cache->head : nullptr);
  }

  // returns grad w.r.t. input images
  Tensor<T> backward(Cache& cache, const Tensor<T>& dlogits, bool accum_param_grads = true) {
    Tensor<T> g = head_.backward(cache.head, dlogits, accum_param_grads);
    g = pool_.backward(cache.pool, g);
    for (size_t i = blocks_.size(); i-- > 0;)
      g = block_backward(blocks_[i], cache.blocks[i], g, accum_param_grads);
    g = relu_.backward(cache.stem_relu, g);
    g = stem_norm_.backward(cache.stem_norm, g, accum_param_grads);
    return stem_.backward(cache.stem, g, accum_param_grads);
  }

  void register_params(nn::ParamStore<T>& store, const std::string& prefix) {
    stem_.register_params(store, prefix + ".stem");
    stem_norm_.register_params(store, prefix + ".stem_norm");
    for (size_t i = 0; i < blocks_.size(); ++i) {
      std::string p = prefix + ".block" + std::to_string(i);
      blocks_[i].conv1.register_params(store, p + ".conv1");
      blocks_[i].norm1.register_params(store, p + ".norm1");
      blocks_[i].conv2.register_params(store, p + ".conv2");
      blocks_[i].norm2.register_params(store, p + ".norm2");
      if (blocks_[i].project) blocks_[i].skip.register_params(store, p + ".skip");
    }
    head_.register_params(store, prefix + ".head");
  }

  int base_channels() const { return base_; }
  int blocks_per_stage() const { return blocks_per_stage_; }

 private:
  struct Block {
    nn::Conv2d<T> conv1, conv2, skip;
    nn::InstanceNorm2d<T> norm1, norm2;
    bool project = false;
  };

  Tensor<T> block_forward(const Block& b, const Tensor<T>& x, BlockCache* c) const {
    Tensor<T> r = b.conv1.forward(x, c ? &c->c1 : nullptr);
    r = b.norm1.forward(r, c ? &c->n1 : nullptr);
    r = relu_.forward(r, c ? &c->r1 : nullptr);
    r = b.conv2.forward(r, c ? &c->c2 : nullptr);
    r = b.norm2.forward(r, c ? &c->n2 : nullptr);
    Tensor<T> s = b.project ? b.skip.forward(x, c ? &c->skip : nullptr) : x;
    for (int64_t k = 0; k < r.numel(); ++k) r[k] += s[k];
    return relu_.forward(r, c ? &c->r2 : nullptr);
  }

  Tensor<T> block_backward(Block& b, BlockCache& c, const Tensor<T>& dy, bool accum) {
    Tensor<T> g = relu_.backward(c.r2, dy);
    // g splits into the residual branch and the skip branch
    Tensor<T> r = b.norm2.backward(c.n2, g, accum);
    r = b.conv2.backward(c.c2, r, accum);
    r = relu_.backward(c.r1, r);
    r = b.norm1.backward(c.n1, r, accum);
    r = b.conv1.backward(c.c1, r, accum);
    Tensor<T> s = b.project ? b.skip.backward(c.skip, g, accum) : g;
    for (int64_t k = 0; k < r.numel(); ++k) r[k] += s[k];
    return r;
  }

  int base_ = 0, blocks_per_stage_ = 1;
  nn::Conv2d<T> stem_;
  nn::InstanceNorm2d<T> stem_norm_;
  std::vector<Block> blocks_;
  nn::Linear<T> head_;
  nn::GlobalAvgPool<T> pool_;
  nn::Relu<T> relu_;
};

// Classifier outputs with softmax probabilities and per-row confidence.
template <class T>
struct Prediction {
  Tensor<T> logits;         // [B, 7]
  Tensor<T> probabilities;  // [B, 7], rows sum to 1
  std::vector<int> argmax_class;
  std::vector<T> confidence;

  int64_t batch() const { return logits.dim(0); }
};

template <class T>
Prediction<T> prediction_from_logits(const Tensor<T>& logits) {
  const int64_t B = logits.dim(0), C = logits.dim(1);
  Prediction<T> pred;
  pred.logits = logits;
  pred.probabilities = Tensor<T>({B, C});
  pred.argmax_class.resize(static_cast<size_t>(B));
  pred.confidence.resize(static_cast<size_t>(B));
  for (int64_t i = 0; i < B; ++i) {
    const T* row = logits.data() + i * C;
    T mx = row[0];
    for (int64_t c = 1; c < C; ++c) mx = std::max(mx, row[c]);
    T sum = 0;
    T* prow = pred.probabilities.data() + i * C;
    for (int64_t c = 0; c < C; ++c) {
      prow[c] = std::exp(row[c] - mx);
      sum += prow[c];
    }
    int best = 0;
    for (int64_t c = 0; c < C; ++c) {
      prow[c] /= sum;
      if (prow[c] > prow[best]) best = static_cast<int>(c);
    }
    pred.argmax_class[static_cast<size_t>(i)] = best;
    pred.confidence[static_cast<size_t>(i)] = prow[best];
  }
  return pred;
}

// Eval-mode prediction; pure function of (parameters, input).
template <class T>
Prediction<T> predict(const ClassifierNet<T>& c, const Tensor<T>& images) {
  return prediction_from_logits(c.forward(images, nullptr));
}

// Rows accepted by the confidence threshold, with their argmax labels.
template <class T>
std::vector<std::pair<int, int>> pseudo_label(const Prediction<T>& pred, T confidence_threshold) {
  std::vector<std::pair<int, int>> out;
  for (int64_t i = 0; i < pred.batch(); ++i) {
    if (pred.confidence[static_cast<size_t>(i)] >= confidence_threshold)
      out.emplace_back(static_cast<int>(i), pred.argmax_class[static_cast<size_t>(i)]);
  }
  return out;
}

}  // namespace fashioncut
