#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "fashioncut/tensor.hpp"

namespace fashioncut {

// 8-bit RGB image, row-major, channels interleaved.
struct ImageU8 {
  int height = 0;
  int width = 0;
  std::vector<uint8_t> pixels;  // height*width*3

  ImageU8() = default;
  ImageU8(int h, int w) : height(h), width(w), pixels(static_cast<size_t>(h) * w * 3, 0) {}

  uint8_t* at(int y, int x) { return pixels.data() + (static_cast<size_t>(y) * width + x) * 3; }
  const uint8_t* at(int y, int x) const {
    return pixels.data() + (static_cast<size_t>(y) * width + x) * 3;
  }
  bool operator==(const ImageU8& o) const {
    return height == o.height && width == o.width && pixels == o.pixels;
  }
};

inline uint8_t to_u8(float v) {
  float q = std::round(v * 255.0f);
  if (q < 0.0f) q = 0.0f;
  if (q > 255.0f) q = 255.0f;
  return static_cast<uint8_t>(q);
}

// Float image in [0,1], used by the procedural renderers before quantization.
struct ImageF {
  int height = 0;
  int width = 0;
  std::vector<float> pixels;  // height*width*3

  ImageF() = default;
  ImageF(int h, int w) : height(h), width(w), pixels(static_cast<size_t>(h) * w * 3, 0.0f) {}

  float* at(int y, int x) { return pixels.data() + (static_cast<size_t>(y) * width + x) * 3; }
  const float* at(int y, int x) const {
    return pixels.data() + (static_cast<size_t>(y) * width + x) * 3;
  }

  ImageU8 quantize() const {
    ImageU8 out(height, width);
    for (size_t i = 0; i < pixels.size(); ++i) out.pixels[i] = to_u8(pixels[i]);
    return out;
  }

  static ImageF from_u8(const ImageU8& img) {
    ImageF out(img.height, img.width);
    for (size_t i = 0; i < img.pixels.size(); ++i)
      out.pixels[i] = static_cast<float>(img.pixels[i]) / 255.0f;
    return out;
  }
};

// Training form: values in [-1,1]. Division first so 255 maps to exactly 1.
template <class T>
void image_into_batch(const ImageU8& img, Tensor<T>& batch, int64_t n) {
  T* dst = batch.pixel(n, 0, 0);
  for (size_t i = 0; i < img.pixels.size(); ++i)
    dst[i] = static_cast<T>(img.pixels[i]) / T(255) * T(2) - T(1);
}

template <class T>
ImageU8 batch_to_image(const Tensor<T>& batch, int64_t n) {
  ImageU8 out(static_cast<int>(batch.dim(1)), static_cast<int>(batch.dim(2)));
  const T* src = batch.pixel(n, 0, 0);
  for (size_t i = 0; i < out.pixels.size(); ++i)
    out.pixels[i] = to_u8(static_cast<float>((src[i] + T(1)) * T(0.5)));
  return out;
}

// Minimal PNG I/O (8-bit RGB only); IDAT handled by zlib. See src/png.cpp.
void write_png(const std::string& path, const ImageU8& img);
ImageU8 read_png(const std::string& path);
std::vector<uint8_t> encode_png(const ImageU8& img);
ImageU8 decode_png(const uint8_t* data, size_t size);

}  // namespace fashioncut
