#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <functional>

#include "doctest.h"
#include "fashioncut/nn.hpp"
#include "test_util.hpp"

using namespace fashioncut;
using namespace fashioncut::nn;

namespace {

Tensor<double> random_tensor(std::vector<int64_t> shape, uint64_t seed, double scale = 1.0) {
  Tensor<double> t(std::move(shape));
  Rng rng(seed);
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.normal() * scale;
  return t;
}

// scalar loss for gradient checking: weighted sum of outputs with fixed
// pseudo-random coefficients, so every output entry matters
double weighted_sum(const Tensor<double>& y, uint64_t seed = 99) {
  Rng rng(seed);
  double s = 0;
  for (int64_t i = 0; i < y.numel(); ++i) s += y[i] * (0.5 + rng.next_double());
  return s;
}

Tensor<double> weighted_sum_grad(const std::vector<int64_t>& shape, uint64_t seed = 99) {
  Tensor<double> g(shape);
  Rng rng(seed);
  for (int64_t i = 0; i < g.numel(); ++i) g[i] = 0.5 + rng.next_double();
  return g;
}

constexpr double kH = 2e-5;
constexpr double kTol = 1e-6;

}  // namespace

TEST_CASE("conv2d forward matches a direct loop") {
  Conv2d<double> conv(2, 3, 3, 1, 1);
  Rng rng(7);
  fill_normal(conv.w.value, rng, 0.5);
  fill_normal(conv.b.value, rng, 0.5);
  Tensor<double> x = random_tensor({2, 5, 4, 2}, 11);
  Tensor<double> y = conv.forward(x, nullptr);
  REQUIRE(y.shape() == std::vector<int64_t>({2, 5, 4, 3}));

  for (int64_t n = 0; n < 2; ++n)
    for (int64_t oy = 0; oy < 5; ++oy)
      for (int64_t ox = 0; ox < 4; ++ox)
        for (int64_t oc = 0; oc < 3; ++oc) {
          double acc = conv.b.value[oc];
          for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
              int64_t iy = oy + ky - 1, ix = ox + kx - 1;
              if (iy < 0 || iy >= 5 || ix < 0 || ix >= 4) continue;
              for (int64_t ic = 0; ic < 2; ++ic)
                acc += x.pixel(n, iy, ix)[ic] *
                       conv.w.value[((ky * 3 + kx) * 2 + ic) * 3 + oc];
            }
          CHECK(testutil::rel_err(acc, y.pixel(n, oy, ox)[oc]) < 1e-12);
        }
}

TEST_CASE("conv2d gradients (stride 1 and 2, including params)") {
  for (int stride : {1, 2}) {
    Conv2d<double> conv(3, 4, 3, stride, 1);
    Rng rng(13 + stride);
    fill_normal(conv.w.value, rng, 0.4);
    fill_normal(conv.b.value, rng, 0.4);
    Tensor<double> x = random_tensor({2, 6, 6, 3}, 17 + stride);

    ParamStore<double> params;
    conv.register_params(params, "conv");
    ParamRef<double> xref{"x", &x, nullptr};

    auto eval = [&] { return weighted_sum(conv.forward(x, nullptr)); };
    auto compute = [&] {
      typename Conv2d<double>::Cache cache;
      Tensor<double> y = conv.forward(x, &cache);
      conv.backward(cache, weighted_sum_grad(y.shape()));
    };
    auto probes = testutil::gradcheck_probes(params, eval, compute, 24, 31, kH);
    for (const auto& p : probes) CHECK(p.rel < kTol);

    // input gradient
    typename Conv2d<double>::Cache cache;
    Tensor<double> y = conv.forward(x, &cache);
    Tensor<double> dx = conv.backward(cache, weighted_sum_grad(y.shape()));
    Rng pick(5);
    for (int c = 0; c < 12; ++c) {
      int64_t i = static_cast<int64_t>(pick.next_below(static_cast<uint64_t>(x.numel())));
      double num = testutil::central_diff(x, i, eval, kH);
      CHECK(testutil::rel_err(dx[i], num, 1e-5) < kTol);
    }
  }
}

TEST_CASE("instance norm gradients") {
  InstanceNorm2d<double> norm(4);
  Rng rng(23);
  fill_normal(norm.gamma.value, rng, 0.3);
  for (int64_t i = 0; i < 4; ++i) norm.gamma.value[i] += 1.0;
  fill_normal(norm.beta.value, rng, 0.3);
  Tensor<double> x = random_tensor({2, 4, 3, 4}, 29);

  ParamStore<double> params;
  norm.register_params(params, "in");

  auto eval = [&] { return weighted_sum(norm.forward(x, nullptr)); };
  auto compute = [&] {
    typename InstanceNorm2d<double>::Cache cache;
    Tensor<double> y = norm.forward(x, &cache);
    norm.backward(cache, weighted_sum_grad(y.shape()));
  };
  auto probes = testutil::gradcheck_probes(params, eval, compute, 16, 37, kH);
  for (const auto& p : probes) CHECK(p.rel < kTol);

  typename InstanceNorm2d<double>::Cache cache;
  Tensor<double> y = norm.forward(x, &cache);
  Tensor<double> dx = norm.backward(cache, weighted_sum_grad(y.shape()));
  Rng pick(41);
  for (int c = 0; c < 12; ++c) {
    int64_t i = static_cast<int64_t>(pick.next_below(static_cast<uint64_t>(x.numel())));
    double num = testutil::central_diff(x, i, eval, kH);
    CHECK(testutil::rel_err(dx[i], num, 1e-5) < kTol);
  }
}

TEST_CASE("linear, activations, upsample, pool gradients") {
  Linear<double> lin(6, 5);
  Rng rng(43);
  fill_normal(lin.w.value, rng, 0.5);
  fill_normal(lin.b.value, rng, 0.5);
  Tensor<double> x = random_tensor({4, 6}, 47);

  ParamStore<double> params;
  lin.register_params(params, "fc");
  LeakyRelu<double> lrelu(0.2);
  Tanh<double> tanh_op;
  Upsample2x<double> up;
  GlobalAvgPool<double> pool;

  // composite: pool(tanh(up(...))) exercises each backward in a chain
  Tensor<double> ximg = random_tensor({2, 3, 3, 4}, 53);
  auto eval = [&] {
    Tensor<double> a = lin.forward(x, nullptr);
    Tensor<double> b = lrelu.forward(a, nullptr);
    Tensor<double> c = up.forward(ximg);
    Tensor<double> d = tanh_op.forward(c, nullptr);
    Tensor<double> e = pool.forward(d, nullptr);
    return weighted_sum(b, 3) + weighted_sum(e, 4);
  };
  auto compute = [&] {
    typename Linear<double>::Cache lc;
    typename LeakyRelu<double>::Cache rc;
    typename Tanh<double>::Cache tc;
    typename GlobalAvgPool<double>::Cache pc;
    Tensor<double> a = lin.forward(x, &lc);
    Tensor<double> b = lrelu.forward(a, &rc);
    Tensor<double> c = up.forward(ximg);
    Tensor<double> d = tanh_op.forward(c, &tc);
    Tensor<double> e = pool.forward(d, &pc);
    lin.backward(lc, lrelu.backward(rc, weighted_sum_grad(b.shape(), 3)));
    Tensor<double> ge = pool.backward(pc, weighted_sum_grad(e.shape(), 4));
    up.backward(tanh_op.backward(tc, ge));
  };
  auto probes = testutil::gradcheck_probes(params, eval, compute, 16, 59, kH);
  for (const auto& p : probes) CHECK(p.rel < kTol);

  // image-input gradient through up/tanh/pool
  typename Tanh<double>::Cache tc;
  typename GlobalAvgPool<double>::Cache pc;
  Tensor<double> c = up.forward(ximg);
  Tensor<double> d = tanh_op.forward(c, &tc);
  Tensor<double> e = pool.forward(d, &pc);
  Tensor<double> gx =
      up.backward(tanh_op.backward(tc, pool.backward(pc, weighted_sum_grad(e.shape(), 4))));
  auto eval_img = [&] {
    Tensor<double> cc = up.forward(ximg);
    Tensor<double> dd = tanh_op.forward(cc, nullptr);
    return weighted_sum(pool.forward(dd, nullptr), 4);
  };
  Rng pick(61);
  for (int i = 0; i < 10; ++i) {
    int64_t k = static_cast<int64_t>(pick.next_below(static_cast<uint64_t>(ximg.numel())));
    double num = testutil::central_diff(ximg, k, eval_img, kH);
    CHECK(testutil::rel_err(gx[k], num, 1e-5) < kTol);
  }
}

TEST_CASE("adam bias-corrected first step and zero-grad fixed point") {
  // at the objective's minimum the gradient is zero and a fresh optimizer
  // must not move at all (the perfect-critic case of the adversarial step)
  {
    Param<float> p;
    p.init_shape({3});
    p.value[0] = 1.0f;
    p.value[1] = -2.0f;
    p.value[2] = 0.5f;
    ParamStore<float> store;
    p.reg(store, "p");
    Adam<float> opt(store, 0.1, 0.5, 0.999);
    opt.zero_grad();
    opt.step();
    CHECK(p.value[0] == 1.0f);
    CHECK(p.value[1] == -2.0f);
    CHECK(p.value[2] == 0.5f);
  }

  Param<float> p;
  p.init_shape({3});
  p.value[0] = 1.0f;
  p.value[1] = -2.0f;
  p.value[2] = 0.5f;
  ParamStore<float> store;
  p.reg(store, "p");
  Adam<float> opt(store, 0.1, 0.5, 0.999);

  p.grad[0] = 1.0f;
  opt.step();
  // first step magnitude is bias-corrected to ~lr regardless of grad scale
  CHECK(std::abs(p.value[0] - (1.0f - 0.1f)) < 1e-5);

  float before1 = p.value[1];
  opt.zero_grad();
  opt.step();
  // m decays but v decays too; the update must stay well below lr
  CHECK(std::abs(p.value[1] - before1) < 0.1f);
}

TEST_CASE("parallel loops are deterministic") {
  Conv2d<float> conv(8, 8, 3, 1, 1);
  Rng rng(71);
  fill_normal(conv.w.value, rng, 0.2);
  Tensor<float> x = random_tensor({7, 12, 12, 8}, 73).cast<float>();
  Tensor<float> y1 = conv.forward(x, nullptr);
  Tensor<float> y2 = conv.forward(x, nullptr);
  for (int64_t i = 0; i < y1.numel(); ++i) REQUIRE(y1[i] == y2[i]);

  typename Conv2d<float>::Cache c1, c2;
  conv.forward(x, &c1);
  conv.forward(x, &c2);
  Tensor<float> dy = random_tensor({7, 12, 12, 8}, 79).cast<float>();
  conv.w.grad.zero();
  conv.b.grad.zero();
  Tensor<float> dx1 = conv.backward(c1, dy);
  Tensor<float> wg1 = conv.w.grad;
  conv.w.grad.zero();
  conv.b.grad.zero();
  Tensor<float> dx2 = conv.backward(c2, dy);
  for (int64_t i = 0; i < dx1.numel(); ++i) REQUIRE(dx1[i] == dx2[i]);
  for (int64_t i = 0; i < wg1.numel(); ++i) REQUIRE(wg1[i] == conv.w.grad[i]);
}
