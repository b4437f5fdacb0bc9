#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "fashioncut/image.hpp"
#include "fashioncut/rng.hpp"

namespace fashioncut {

struct ParamError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

constexpr int kNumClasses = 7;

enum class PatternClass : int {
  kPlain = 0,
  kFloral = 1,
  kStriped = 2,
  kDotted = 3,
  kCamouflage = 4,
  kGradient = 5,
  kHerringbone = 6,
};

const char* class_name(PatternClass c);
PatternClass class_from_id(int id);
PatternClass class_from_name(const std::string& name);

struct Rgb {
  float r = 0, g = 0, b = 0;
  float linf(const Rgb& o) const {
    float dr = std::abs(r - o.r), dg = std::abs(g - o.g), db = std::abs(b - o.b);
    return std::max(dr, std::max(dg, db));
  }
};

// All knobs of one render, derived deterministically from (seed, class).
struct RenderParams {
  float pattern_scale = 4.0f;  // texture periods per image width
  Rgb primary_color{0.2f, 0.4f, 0.8f};
  Rgb secondary_color{0.9f, 0.9f, 0.2f};
  float orientation = 0.0f;  // radians in [0, pi)
  Rgb background_color{0.8f, 0.8f, 0.8f};
  float element_jitter = 0.0f;  // [0,1]
  uint64_t seed = 0;

  // primary/secondary must be visibly distinct
  static constexpr float kMinColorSeparation = 0.15f;

  static RenderParams from_seed(uint64_t seed, PatternClass c);
  void validate() const;
};

struct Distortion {
  float blur_sigma = 0.0f;         // pixels, >= 0
  float warp_strength = 0.0f;      // [0, 0.2], fraction of image size
  float lighting_gradient = 0.0f;  // [0,1]
  float background_clutter = 0.0f; // [0,1]
  float noise_sigma = 0.0f;        // >= 0, on [0,1] intensities

  bool is_identity() const {
    return blur_sigma == 0 && warp_strength == 0 && lighting_gradient == 0 &&
           background_clutter == 0 && noise_sigma == 0;
  }
  int num_active() const {
    return (blur_sigma > 0) + (warp_strength > 0) + (lighting_gradient > 0) +
           (background_clutter > 0) + (noise_sigma > 0);
  }
};

struct DomainStyle {
  enum class Tag { kSource, kTarget };
  Tag tag = Tag::kSource;
  Distortion distortion;

  static DomainStyle source() { return DomainStyle{Tag::kSource, {}}; }
  static DomainStyle target_default();
  void validate() const;
};

const char* domain_name(DomainStyle::Tag t);
DomainStyle::Tag domain_from_name(const std::string& name);

struct LabeledImage {
  ImageU8 pixels;
  int class_id = 0;
  DomainStyle::Tag domain = DomainStyle::Tag::kSource;
  uint64_t seed = 0;
  std::string path;  // relative to the dataset root, empty until stored
};

// Clean render of one pattern sample. Analytic per class; see src/pattern.cpp.
LabeledImage render_pattern(PatternClass c, const RenderParams& params, int size);

// Distortions applied in fixed order: warp, lighting, clutter, blur, noise.
LabeledImage apply_domain_shift(const LabeledImage& img, const DomainStyle& style,
                                uint64_t shift_seed);

}  // namespace fashioncut
