#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "fashioncut/rng.hpp"
#include "fashioncut/tensor.hpp"
#include "fashioncut/threadpool.hpp"

namespace fashioncut::nn {

using fashioncut::Tensor;

template <class T>
struct ParamRef {
  std::string name;
  Tensor<T>* value = nullptr;
  Tensor<T>* grad = nullptr;
};

template <class T>
using ParamStore = std::vector<ParamRef<T>>;

template <class T>
struct Param {
  Tensor<T> value;
  Tensor<T> grad;

  void init_shape(std::vector<int64_t> shape) {
    value = Tensor<T>(shape);
    grad = Tensor<T>(shape);
  }
  void zero_grad() { grad.zero(); }
  void reg(ParamStore<T>& store, const std::string& name) {
    store.push_back(ParamRef<T>{name, &value, &grad});
  }
};

template <class T>
void fill_normal(Tensor<T>& t, Rng& rng, double stddev) {
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<T>(rng.normal() * stddev);
}

// ---------------------------------------------------------------------------
// Conv2d, NHWC, weights [ky][kx][ic][oc]

template <class T>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(int in_ch, int out_ch, int ksize, int stride, int pad)
      : in_ch_(in_ch), out_ch_(out_ch), k_(ksize), stride_(stride), pad_(pad) {
    w.init_shape({k_, k_, in_ch_, out_ch_});
    b.init_shape({out_ch_});
  }

  void init_weights(Rng& rng, double stddev) { fill_normal(w.value, rng, stddev); b.value.zero(); }
  void init_he(Rng& rng) { init_weights(rng, std::sqrt(2.0 / (k_ * k_ * in_ch_))); }

  struct Cache {
    Tensor<T> x;
  };

  int out_size(int in) const { return (in + 2 * pad_ - k_) / stride_ + 1; }

  // Compile-time channel counts let the compiler keep the accumulator block
  // in vector registers across the input-channel loop; <0> is the runtime
  // fallback for odd widths (3-channel image heads, the 1-wide critic head).
  // Narrow layers split the reduction into four partial accumulators so the
  // FMA latency chain does not serialize the loop.
  template <int OCF>
  static void fwd_pixel(const T* __restrict__ xr, const T* __restrict__ wr, T* __restrict__ acc,
                        int ic_count, int oc_count) {
    const int OC = OCF > 0 ? OCF : oc_count;
    if constexpr (OCF > 0 && OCF <= 32) {
      T a0[OCF] = {}, a1[OCF] = {}, a2[OCF] = {}, a3[OCF] = {};
      int ic = 0;
      for (; ic + 4 <= ic_count; ic += 4) {
        const T x0 = xr[ic], x1 = xr[ic + 1], x2 = xr[ic + 2], x3 = xr[ic + 3];
        const T* __restrict__ w0 = wr + static_cast<int64_t>(ic) * OCF;
        for (int oc = 0; oc < OCF; ++oc) {
          a0[oc] += x0 * w0[oc];
          a1[oc] += x1 * w0[OCF + oc];
          a2[oc] += x2 * w0[2 * OCF + oc];
          a3[oc] += x3 * w0[3 * OCF + oc];
        }
      }
      for (; ic < ic_count; ++ic) {
        const T xv = xr[ic];
        const T* __restrict__ wro = wr + static_cast<int64_t>(ic) * OCF;
        for (int oc = 0; oc < OCF; ++oc) a0[oc] += xv * wro[oc];
      }
      for (int oc = 0; oc < OCF; ++oc) acc[oc] += a0[oc] + a1[oc] + a2[oc] + a3[oc];
      return;
    }
    for (int ic = 0; ic < ic_count; ++ic) {
      const T xv = xr[ic];
      const T* __restrict__ wro = wr + static_cast<int64_t>(ic) * OC;
      for (int oc = 0; oc < OC; ++oc) acc[oc] += xv * wro[oc];
    }
  }

  template <int OCF>
  void forward_impl(const Tensor<T>& x, Tensor<T>& y) const {
    const int64_t N = x.dim(0), H = x.dim(1), W = x.dim(2);
    const int64_t OH = y.dim(1), OW = y.dim(2);
    const T* wp = w.value.data();
    const T* bp = b.value.data();
    const int IC = in_ch_, OC = out_ch_, K = k_, S = stride_, P = pad_;

    parallel_for(N, [&](int64_t n, int) {
      constexpr int kMaxOC = 512;
      T acc[OCF > 0 ? OCF : kMaxOC];
      for (int64_t oy = 0; oy < OH; ++oy) {
        for (int64_t ox = 0; ox < OW; ++ox) {
          for (int oc = 0; oc < OC; ++oc) acc[oc] = bp[oc];
          const int64_t iy0 = oy * S - P, ix0 = ox * S - P;
          for (int ky = 0; ky < K; ++ky) {
            const int64_t iy = iy0 + ky;
            if (iy < 0 || iy >= H) continue;
            for (int kx = 0; kx < K; ++kx) {
              const int64_t ix = ix0 + kx;
              if (ix < 0 || ix >= W) continue;
              fwd_pixel<OCF>(x.pixel(n, iy, ix),
                             wp + ((static_cast<int64_t>(ky) * K + kx) * IC) * OC, acc, IC, OC);
            }
          }
          T* yp = y.pixel(n, oy, ox);
          for (int oc = 0; oc < OC; ++oc) yp[oc] = acc[oc];
        }
      }
    });
  }

  Tensor<T> forward(const Tensor<T>& x, Cache* cache) const {
    const int64_t N = x.dim(0), H = x.dim(1), W = x.dim(2);
    if (x.dim(3) != in_ch_) throw std::invalid_argument("conv: channel mismatch");
    const int64_t OH = out_size(static_cast<int>(H)), OW = out_size(static_cast<int>(W));
    Tensor<T> y({N, OH, OW, out_ch_});
    switch (out_ch_) {
      case 16: forward_impl<16>(x, y); break;
      case 32: forward_impl<32>(x, y); break;
      case 64: forward_impl<64>(x, y); break;
      case 128: forward_impl<128>(x, y); break;
      default:
        if (out_ch_ > 512) throw std::invalid_argument("conv: out_ch too large");
        forward_impl<0>(x, y);
        break;
    }
    if (cache) cache->x = x;
    return y;
  }

  template <int ICF>
  static void bwd_dx_pixel(const T* __restrict__ dyp, const T* __restrict__ wtk,
                           T* __restrict__ dxp, int oc_count, int ic_count) {
    const int IC = ICF > 0 ? ICF : ic_count;
    if constexpr (ICF > 0 && ICF <= 32) {
      T a0[ICF] = {}, a1[ICF] = {}, a2[ICF] = {}, a3[ICF] = {};
      int oc = 0;
      for (; oc + 4 <= oc_count; oc += 4) {
        const T g0 = dyp[oc], g1 = dyp[oc + 1], g2 = dyp[oc + 2], g3 = dyp[oc + 3];
        const T* __restrict__ w0 = wtk + static_cast<int64_t>(oc) * ICF;
        for (int ic = 0; ic < ICF; ++ic) {
          a0[ic] += g0 * w0[ic];
          a1[ic] += g1 * w0[ICF + ic];
          a2[ic] += g2 * w0[2 * ICF + ic];
          a3[ic] += g3 * w0[3 * ICF + ic];
        }
      }
      for (; oc < oc_count; ++oc) {
        const T g = dyp[oc];
        const T* __restrict__ wrow = wtk + static_cast<int64_t>(oc) * ICF;
        for (int ic = 0; ic < ICF; ++ic) a0[ic] += g * wrow[ic];
      }
      for (int ic = 0; ic < ICF; ++ic) dxp[ic] += a0[ic] + a1[ic] + a2[ic] + a3[ic];
      return;
    }
    constexpr int kMaxC = 512;
    T acc[ICF > 0 ? ICF : kMaxC];
    for (int ic = 0; ic < IC; ++ic) acc[ic] = T(0);
    for (int oc = 0; oc < oc_count; ++oc) {
      const T g = dyp[oc];
      const T* __restrict__ wrow = wtk + static_cast<int64_t>(oc) * IC;
      for (int ic = 0; ic < IC; ++ic) acc[ic] += g * wrow[ic];
    }
    for (int ic = 0; ic < IC; ++ic) dxp[ic] += acc[ic];
  }

  template <int ICF, int OCF>
  void backward_impl(const Tensor<T>& x, const Tensor<T>& dy, Tensor<T>& dx, const T* wtp,
                     std::vector<Tensor<T>>& dw_scratch, std::vector<Tensor<T>>& db_scratch,
                     bool accum_param_grads) {
    const int64_t N = x.dim(0), H = x.dim(1), W = x.dim(2);
    const int64_t OH = dy.dim(1), OW = dy.dim(2);
    const int IC = in_ch_, OC = out_ch_, K = k_, S = stride_, P = pad_;

    ThreadPool::instance().parallel_chunks(N, [&](int64_t n0, int64_t n1, int slot) {
      T* dwp = accum_param_grads ? dw_scratch[slot].data() : nullptr;
      T* dbp = accum_param_grads ? db_scratch[slot].data() : nullptr;
      for (int64_t n = n0; n < n1; ++n) {
        // pass 1: input gradient (and bias gradient alongside)
        for (int64_t oy = 0; oy < OH; ++oy) {
          for (int64_t ox = 0; ox < OW; ++ox) {
            const T* __restrict__ dyp = dy.pixel(n, oy, ox);
            if (dbp)
              for (int oc = 0; oc < OC; ++oc) dbp[oc] += dyp[oc];
            const int64_t iy0 = oy * S - P, ix0 = ox * S - P;
            for (int ky = 0; ky < K; ++ky) {
              const int64_t iy = iy0 + ky;
              if (iy < 0 || iy >= H) continue;
              for (int kx = 0; kx < K; ++kx) {
                const int64_t ix = ix0 + kx;
                if (ix < 0 || ix >= W) continue;
                const int64_t kk = static_cast<int64_t>(ky) * K + kx;
                bwd_dx_pixel<ICF>(dyp, wtp + kk * OC * IC, dx.pixel(n, iy, ix), OC, IC);
              }
            }
          }
        }
        if (!dwp) continue;
        // pass 2: weight gradient, register-accumulated per (tap, ic block)
        // so repeated stores to the same dw rows never serialize the loop
        for (int ky = 0; ky < K; ++ky) {
          for (int kx = 0; kx < K; ++kx) {
            const int64_t kk = static_cast<int64_t>(ky) * K + kx;
            T* __restrict__ dwk = dwp + kk * IC * OC;
            int ic = 0;
            for (; ic + 4 <= IC; ic += 4) {
              accumulate_dw_block<OCF, 4>(x, dy, n, ky, kx, ic, dwk);
            }
            for (; ic < IC; ++ic) accumulate_dw_block<OCF, 1>(x, dy, n, ky, kx, ic, dwk);
          }
        }
      }
    });
  }

  // Sums x[...,ic..ic+B) * dy over every valid output pixel for one kernel
  // tap, keeping the B x OC accumulator block in registers.
  template <int OCF, int B>
  void accumulate_dw_block(const Tensor<T>& x, const Tensor<T>& dy, int64_t n, int ky, int kx,
                           int ic, T* __restrict__ dwk) const {
    const int64_t H = x.dim(1), W = x.dim(2);
    const int64_t OH = dy.dim(1), OW = dy.dim(2);
    const int IC = in_ch_, OC = out_ch_, S = stride_, P = pad_;
    constexpr int kMaxOC = 512;
    constexpr int kAcc = OCF > 0 ? OCF : kMaxOC;
    T acc[B][kAcc];
    for (int b = 0; b < B; ++b)
      for (int oc = 0; oc < (OCF > 0 ? OCF : OC); ++oc) acc[b][oc] = T(0);

    for (int64_t oy = 0; oy < OH; ++oy) {
      const int64_t iy = oy * S + ky - P;
      if (iy < 0 || iy >= H) continue;
      for (int64_t ox = 0; ox < OW; ++ox) {
        const int64_t ix = ox * S + kx - P;
        if (ix < 0 || ix >= W) continue;
        const T* __restrict__ xp = x.pixel(n, iy, ix) + ic;
        const T* __restrict__ dyp = dy.pixel(n, oy, ox);
        for (int b = 0; b < B; ++b) {
          const T xv = xp[b];
          for (int oc = 0; oc < (OCF > 0 ? OCF : OC); ++oc) acc[b][oc] += xv * dyp[oc];
        }
      }
    }
    for (int b = 0; b < B; ++b) {
      T* __restrict__ dst = dwk + static_cast<int64_t>(ic + b) * OC;
      for (int oc = 0; oc < (OCF > 0 ? OCF : OC); ++oc) dst[oc] += acc[b][oc];
    }
  }

  // dy -> dx; accumulates into w.grad/b.grad unless param grads are skipped
  // (frozen discriminator inside a generator pass).
  Tensor<T> backward(const Cache& cache, const Tensor<T>& dy, bool accum_param_grads = true) {
    const Tensor<T>& x = cache.x;
    const int64_t N = x.dim(0);
    const int IC = in_ch_, OC = out_ch_, K = k_;
    Tensor<T> dx(x.shape());

    // transposed weights [ky][kx][oc][ic] for the dx pass
    Tensor<T> wt({k_, k_, out_ch_, in_ch_});
    {
      const T* wp = w.value.data();
      T* tp = wt.data();
      for (int64_t kk = 0; kk < static_cast<int64_t>(K) * K; ++kk)
        for (int ic = 0; ic < IC; ++ic)
          for (int oc = 0; oc < OC; ++oc)
            tp[(kk * OC + oc) * IC + ic] = wp[(kk * IC + ic) * OC + oc];
    }

    const int nthreads = ThreadPool::instance().num_threads();
    std::vector<Tensor<T>> dw_scratch, db_scratch;
    if (accum_param_grads) {
      for (int t = 0; t < nthreads; ++t) {
        dw_scratch.emplace_back(w.value.shape());
        db_scratch.emplace_back(b.value.shape());
      }
    }

    auto run = [&](auto icf, auto ocf) {
      backward_impl<decltype(icf)::value, decltype(ocf)::value>(x, dy, dx, wt.data(), dw_scratch,
                                                                db_scratch, accum_param_grads);
    };
    auto dispatch_oc = [&](auto icf) {
      switch (OC) {
        case 16: run(icf, std::integral_constant<int, 16>{}); break;
        case 32: run(icf, std::integral_constant<int, 32>{}); break;
        case 64: run(icf, std::integral_constant<int, 64>{}); break;
        case 128: run(icf, std::integral_constant<int, 128>{}); break;
        default:
          if (OC > 512) throw std::invalid_argument("conv: out_ch too large");
          run(icf, std::integral_constant<int, 0>{});
          break;
      }
    };
    switch (IC) {
      case 16: dispatch_oc(std::integral_constant<int, 16>{}); break;
      case 32: dispatch_oc(std::integral_constant<int, 32>{}); break;
      case 64: dispatch_oc(std::integral_constant<int, 64>{}); break;
      case 128: dispatch_oc(std::integral_constant<int, 128>{}); break;
      default:
        if (IC > 512) throw std::invalid_argument("conv: in_ch too large");
        dispatch_oc(std::integral_constant<int, 0>{});
        break;
    }
    (void)N;

    if (accum_param_grads) {
      for (int t = 0; t < nthreads; ++t) {
        for (int64_t i = 0; i < w.grad.numel(); ++i) w.grad[i] += dw_scratch[t][i];
        for (int64_t i = 0; i < b.grad.numel(); ++i) b.grad[i] += db_scratch[t][i];
      }
    }
    return dx;
  }

  void register_params(ParamStore<T>& store, const std::string& prefix) {
    w.reg(store, prefix + ".w");
    b.reg(store, prefix + ".b");
  }

  Param<T> w, b;

 private:
  int in_ch_ = 0, out_ch_ = 0, k_ = 0, stride_ = 1, pad_ = 0;
};

// ---------------------------------------------------------------------------
// InstanceNorm2d: per-(sample, channel) normalization over H*W, affine.
// Batch-independent, so eval behavior never depends on batch composition.

template <class T>
class InstanceNorm2d {
 public:
  InstanceNorm2d() = default;
  explicit InstanceNorm2d(int channels) : channels_(channels) {
    gamma.init_shape({channels});
    beta.init_shape({channels});
    gamma.value.fill(T(1));
  }

  struct Cache {
    Tensor<T> xhat;
    Tensor<T> inv_std;  // [N, C]
  };

  Tensor<T> forward(const Tensor<T>& x, Cache* cache) const {
    const int64_t N = x.dim(0), H = x.dim(1), W = x.dim(2), C = x.dim(3);
    const int64_t M = H * W;
    Tensor<T> y(x.shape());
    Tensor<T> xhat_store;
    Tensor<T> inv_store({N, C});
    if (cache) xhat_store = Tensor<T>(x.shape());
    const T* gp = gamma.value.data();
    const T* bp = beta.value.data();
    T* invp = inv_store.data();
    const T eps = T(1e-5);

    parallel_for(N, [&](int64_t n, int) {
      std::vector<T> mean(static_cast<size_t>(C), T(0)), var(static_cast<size_t>(C), T(0));
      const T* xb = x.pixel(n, 0, 0);
      for (int64_t p = 0; p < M; ++p) {
        const T* __restrict__ px = xb + p * C;
        for (int64_t c = 0; c < C; ++c) mean[c] += px[c];
      }
      for (int64_t c = 0; c < C; ++c) mean[c] /= T(M);
      for (int64_t p = 0; p < M; ++p) {
        const T* __restrict__ px = xb + p * C;
        for (int64_t c = 0; c < C; ++c) {
          T d = px[c] - mean[c];
          var[c] += d * d;
        }
      }
      for (int64_t c = 0; c < C; ++c) var[c] = T(1) / std::sqrt(var[c] / T(M) + eps);

      T* yb = y.pixel(n, 0, 0);
      T* hb = cache ? xhat_store.pixel(n, 0, 0) : nullptr;
      for (int64_t p = 0; p < M; ++p) {
        const T* __restrict__ px = xb + p * C;
        T* __restrict__ py = yb + p * C;
        for (int64_t c = 0; c < C; ++c) {
          T h = (px[c] - mean[c]) * var[c];
          if (hb) hb[p * C + c] = h;
          py[c] = gp[c] * h + bp[c];
        }
      }
      for (int64_t c = 0; c < C; ++c) invp[n * C + c] = var[c];
    });
    if (cache) {
      cache->xhat = std::move(xhat_store);
      cache->inv_std = std::move(inv_store);
    }
    return y;
  }

  Tensor<T> backward(const Cache& cache, const Tensor<T>& dy, bool accum_param_grads = true) {
    const Tensor<T>& xhat = cache.xhat;
    const int64_t N = xhat.dim(0), H = xhat.dim(1), W = xhat.dim(2), C = xhat.dim(3);
    const int64_t M = H * W;
    Tensor<T> dx(xhat.shape());
    const T* gp = gamma.value.data();

    const int nthreads = ThreadPool::instance().num_threads();
    std::vector<Tensor<T>> dg_scratch, db_scratch;
    for (int t = 0; t < nthreads; ++t) {
      dg_scratch.emplace_back(gamma.value.shape());
      db_scratch.emplace_back(beta.value.shape());
    }

    ThreadPool::instance().parallel_chunks(N, [&](int64_t n0, int64_t n1, int slot) {
      std::vector<T> sum_dh(static_cast<size_t>(C)), sum_dh_h(static_cast<size_t>(C));
      T* dg = dg_scratch[slot].data();
      T* db = db_scratch[slot].data();
      for (int64_t n = n0; n < n1; ++n) {
        const T* hb = xhat.pixel(n, 0, 0);
        const T* dyb = dy.pixel(n, 0, 0);
        const T* inv = cache.inv_std.data() + n * C;
        std::fill(sum_dh.begin(), sum_dh.end(), T(0));
        std::fill(sum_dh_h.begin(), sum_dh_h.end(), T(0));
        for (int64_t p = 0; p < M; ++p) {
          const T* __restrict__ d = dyb + p * C;
          const T* __restrict__ h = hb + p * C;
          for (int64_t c = 0; c < C; ++c) {
            const T dh = d[c] * gp[c];
            sum_dh[c] += dh;
            sum_dh_h[c] += dh * h[c];
            dg[c] += d[c] * h[c];
            db[c] += d[c];
          }
        }
        T* dxb = dx.pixel(n, 0, 0);
        for (int64_t p = 0; p < M; ++p) {
          const T* __restrict__ d = dyb + p * C;
          const T* __restrict__ h = hb + p * C;
          T* __restrict__ o = dxb + p * C;
          for (int64_t c = 0; c < C; ++c) {
            const T dh = d[c] * gp[c];
            o[c] = inv[c] * (dh - sum_dh[c] / T(M) - h[c] * (sum_dh_h[c] / T(M)));
          }
        }
      }
    });

    if (accum_param_grads) {
      for (int t = 0; t < nthreads; ++t) {
        for (int64_t i = 0; i < C; ++i) gamma.grad[i] += dg_scratch[t][i];
        for (int64_t i = 0; i < C; ++i) beta.grad[i] += db_scratch[t][i];
      }
    }
    return dx;
  }

  void register_params(ParamStore<T>& store, const std::string& prefix) {
    gamma.reg(store, prefix + ".gamma");
    beta.reg(store, prefix + ".beta");
  }

  Param<T> gamma, beta;

 private:
  int channels_ = 0;
};

// ---------------------------------------------------------------------------
// Activations

template <class T>
struct LeakyRelu {
  T slope;
  explicit LeakyRelu(T s = T(0.2)) : slope(s) {}

  struct Cache {
    Tensor<T> x;
  };

  Tensor<T> forward(const Tensor<T>& x, Cache* cache) const {
    Tensor<T> y(x.shape());
    for (int64_t i = 0; i < x.numel(); ++i) y[i] = x[i] > T(0) ? x[i] : slope * x[i];
    if (cache) cache->x = x;
    return y;
  }
  Tensor<T> backward(const Cache& cache, const Tensor<T>& dy) const {
    Tensor<T> dx(dy.shape());
    for (int64_t i = 0; i < dy.numel(); ++i)
      dx[i] = cache.x[i] > T(0) ? dy[i] : slope * dy[i];
    return dx;
  }
};

template <class T>
struct Relu : LeakyRelu<T> {
  Relu() : LeakyRelu<T>(T(0)) {}
};

template <class T>
struct Tanh {
  struct Cache {
    Tensor<T> y;
  };
  Tensor<T> forward(const Tensor<T>& x, Cache* cache) const {
    Tensor<T> y(x.shape());
    for (int64_t i = 0; i < x.numel(); ++i) y[i] = std::tanh(x[i]);
    if (cache) cache->y = y;
    return y;
  }
  Tensor<T> backward(const Cache& cache, const Tensor<T>& dy) const {
    Tensor<T> dx(dy.shape());
    for (int64_t i = 0; i < dy.numel(); ++i) dx[i] = dy[i] * (T(1) - cache.y[i] * cache.y[i]);
    return dx;
  }
};

// ---------------------------------------------------------------------------
// Nearest-neighbor 2x upsample

template <class T>
struct Upsample2x {
  Tensor<T> forward(const Tensor<T>& x) const {
    const int64_t N = x.dim(0), H = x.dim(1), W = x.dim(2), C = x.dim(3);
    Tensor<T> y({N, H * 2, W * 2, C});
    parallel_for(N, [&](int64_t n, int) {
      for (int64_t yy = 0; yy < H * 2; ++yy) {
        for (int64_t xx = 0; xx < W * 2; ++xx) {
          const T* src = x.pixel(n, yy / 2, xx / 2);
          T* dst = y.pixel(n, yy, xx);
          for (int64_t c = 0; c < C; ++c) dst[c] = src[c];
        }
      }
    });
    return y;
  }
  Tensor<T> backward(const Tensor<T>& dy) const {
    const int64_t N = dy.dim(0), H2 = dy.dim(1), W2 = dy.dim(2), C = dy.dim(3);
    Tensor<T> dx({N, H2 / 2, W2 / 2, C});
    parallel_for(N, [&](int64_t n, int) {
      for (int64_t yy = 0; yy < H2; ++yy) {
        for (int64_t xx = 0; xx < W2; ++xx) {
          const T* src = dy.pixel(n, yy, xx);
          T* dst = dx.pixel(n, yy / 2, xx / 2);
          for (int64_t c = 0; c < C; ++c) dst[c] += src[c];
        }
      }
    });
    return dx;
  }
};

// ---------------------------------------------------------------------------
// Linear over row-major [M, In] -> [M, Out]

template <class T>
class Linear {
 public:
  Linear() = default;
  Linear(int in_dim, int out_dim) : in_(in_dim), out_(out_dim) {
    w.init_shape({in_dim, out_dim});
    b.init_shape({out_dim});
  }

  void init_he(Rng& rng) { fill_normal(w.value, rng, std::sqrt(2.0 / in_)); b.value.zero(); }
  void init_xavier(Rng& rng) { fill_normal(w.value, rng, std::sqrt(1.0 / in_)); b.value.zero(); }

  struct Cache {
    Tensor<T> x;
  };

  Tensor<T> forward(const Tensor<T>& x, Cache* cache) const {
    const int64_t M = x.dim(0);
    if (x.dim(1) != in_) throw std::invalid_argument("linear: dim mismatch");
    Tensor<T> y({M, out_});
    const T* wp = w.value.data();
    for (int64_t m = 0; m < M; ++m) {
      const T* __restrict__ xr = x.data() + m * in_;
      T* __restrict__ yr = y.data() + m * out_;
      for (int o = 0; o < out_; ++o) yr[o] = b.value[o];
      for (int i = 0; i < in_; ++i) {
        const T xv = xr[i];
        const T* __restrict__ wr = wp + static_cast<int64_t>(i) * out_;
        for (int o = 0; o < out_; ++o) yr[o] += xv * wr[o];
      }
    }
    if (cache) cache->x = x;
    return y;
  }

  Tensor<T> backward(const Cache& cache, const Tensor<T>& dy, bool accum_param_grads = true) {
    const int64_t M = dy.dim(0);
    Tensor<T> dx({M, in_});
    const T* wp = w.value.data();
    for (int64_t m = 0; m < M; ++m) {
      const T* __restrict__ dyr = dy.data() + m * out_;
      const T* __restrict__ xr = cache.x.data() + m * in_;
      T* __restrict__ dxr = dx.data() + m * in_;
      for (int i = 0; i < in_; ++i) {
        const T* __restrict__ wr = wp + static_cast<int64_t>(i) * out_;
        T s = 0;
        for (int o = 0; o < out_; ++o) s += dyr[o] * wr[o];
        dxr[i] = s;
      }
      if (accum_param_grads) {
        for (int i = 0; i < in_; ++i) {
          const T xv = xr[i];
          T* __restrict__ gw = w.grad.data() + static_cast<int64_t>(i) * out_;
          for (int o = 0; o < out_; ++o) gw[o] += xv * dyr[o];
        }
        for (int o = 0; o < out_; ++o) b.grad[o] += dyr[o];
      }
    }
    return dx;
  }

  void register_params(ParamStore<T>& store, const std::string& prefix) {
    w.reg(store, prefix + ".w");
    b.reg(store, prefix + ".b");
  }

  Param<T> w, b;
  int in_dim() const { return in_; }
  int out_dim() const { return out_; }

 private:
  int in_ = 0, out_ = 0;
};

// ---------------------------------------------------------------------------
// Global average pool [N,H,W,C] -> [N,C]

template <class T>
struct GlobalAvgPool {
  struct Cache {
    int64_t h = 0, w = 0;
  };
  Tensor<T> forward(const Tensor<T>& x, Cache* cache) const {
    const int64_t N = x.dim(0), H = x.dim(1), W = x.dim(2), C = x.dim(3);
    Tensor<T> y({N, C});
    for (int64_t n = 0; n < N; ++n) {
      const T* xb = x.pixel(n, 0, 0);
      T* yr = y.data() + n * C;
      for (int64_t p = 0; p < H * W; ++p)
        for (int64_t c = 0; c < C; ++c) yr[c] += xb[p * C + c];
      for (int64_t c = 0; c < C; ++c) yr[c] /= T(H * W);
    }
    if (cache) {
      cache->h = H;
      cache->w = W;
    }
    return y;
  }
  Tensor<T> backward(const Cache& cache, const Tensor<T>& dy) const {
    const int64_t N = dy.dim(0), C = dy.dim(1);
    Tensor<T> dx({N, cache.h, cache.w, C});
    const T inv = T(1) / T(cache.h * cache.w);
    for (int64_t n = 0; n < N; ++n) {
      const T* dyr = dy.data() + n * C;
      T* xb = dx.pixel(n, 0, 0);
      for (int64_t p = 0; p < cache.h * cache.w; ++p)
        for (int64_t c = 0; c < C; ++c) xb[p * C + c] = dyr[c] * inv;
    }
    return dx;
  }
};

// ---------------------------------------------------------------------------
// Adam. Moment buffers are named after their parameter so checkpoints can
// round-trip them exactly.

template <class T>
class Adam {
 public:
  Adam() = default;
  Adam(ParamStore<T> params, double lr, double beta1, double beta2, double eps = 1e-8)
      : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (auto& p : params_) {
      m_.emplace_back(p.value->shape());
      v_.emplace_back(p.value->shape());
    }
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (size_t k = 0; k < params_.size(); ++k) {
      Tensor<T>& val = *params_[k].value;
      Tensor<T>& grad = *params_[k].grad;
      Tensor<T>& m = m_[k];
      Tensor<T>& v = v_[k];
      for (int64_t i = 0; i < val.numel(); ++i) {
        const double g = static_cast<double>(grad[i]);
        const double mi = beta1_ * static_cast<double>(m[i]) + (1.0 - beta1_) * g;
        const double vi = beta2_ * static_cast<double>(v[i]) + (1.0 - beta2_) * g * g;
        m[i] = static_cast<T>(mi);
        v[i] = static_cast<T>(vi);
        val[i] -= static_cast<T>(lr_ * (mi / bc1) / (std::sqrt(vi / bc2) + eps_));
      }
    }
  }

  void zero_grad() {
    for (auto& p : params_) p.grad->zero();
  }

  void set_lr(double lr) { lr_ = lr; }
  int64_t step_count() const { return t_; }
  void set_step_count(int64_t t) { t_ = t; }

  const ParamStore<T>& params() const { return params_; }
  Tensor<T>& moment1(size_t k) { return m_[k]; }
  Tensor<T>& moment2(size_t k) { return v_[k]; }

 private:
  ParamStore<T> params_;
  std::vector<Tensor<T>> m_, v_;
  double lr_ = 1e-3, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  int64_t t_ = 0;
};

}  // namespace fashioncut::nn
