#pragma once

#include <array>
#include <cassert>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace fashioncut {

// Dense row-major tensor. Image batches are NHWC (channels contiguous per
// pixel), which keeps per-pixel channel loops vectorizable and makes
// feature gathers at sampled locations a single memcpy-like span.
template <class T>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<int64_t> shape) : shape_(std::move(shape)) {
    data_.assign(numel_of(shape_), T(0));
  }

  Tensor(std::initializer_list<int64_t> shape) : Tensor(std::vector<int64_t>(shape)) {}

  static int64_t numel_of(const std::vector<int64_t>& s) {
    int64_t n = 1;
    for (int64_t d : s) {
      if (d < 0) throw std::invalid_argument("negative tensor dim");
      n *= d;
    }
    return n;
  }

  const std::vector<int64_t>& shape() const { return shape_; }
  int64_t dim(int i) const { return shape_.at(static_cast<size_t>(i)); }
  int ndim() const { return static_cast<int>(shape_.size()); }
  int64_t numel() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  T& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  const T& operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  // NHWC pixel pointer
  T* pixel(int64_t n, int64_t y, int64_t x) {
    return data() + ((n * dim(1) + y) * dim(2) + x) * dim(3);
  }
  const T* pixel(int64_t n, int64_t y, int64_t x) const {
    return data() + ((n * dim(1) + y) * dim(2) + x) * dim(3);
  }

  void fill(T v) { data_.assign(data_.size(), v); }
  void zero() { fill(T(0)); }

  void reshape(std::vector<int64_t> shape) {
    if (numel_of(shape) != numel()) throw std::invalid_argument("reshape numel mismatch");
    shape_ = std::move(shape);
  }

  template <class U>
  Tensor<U> cast() const {
    Tensor<U> out(shape_);
    for (int64_t i = 0; i < numel(); ++i) out[i] = static_cast<U>(data_[static_cast<size_t>(i)]);
    return out;
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  std::string shape_str() const {
    std::string s = "(";
    for (size_t i = 0; i < shape_.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(shape_[i]);
    }
    return s + ")";
  }

 private:
  std::vector<int64_t> shape_;
  std::vector<T> data_;
};

template <class T>
void check_shape(const Tensor<T>& t, const std::vector<int64_t>& want, const char* what) {
  if (t.shape() != want) {
    Tensor<T> tmp(want);
    throw std::invalid_argument(std::string(what) + ": expected shape " + tmp.shape_str() +
                                ", got " + t.shape_str());
  }
}

}  // namespace fashioncut
