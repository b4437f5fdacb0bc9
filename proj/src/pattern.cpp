#include "fashioncut/pattern.hpp"

#include <algorithm>
#include <cmath>

namespace fashioncut {

namespace {

constexpr float kPi = 3.14159265358979323846f;

const char* kClassNames[kNumClasses] = {"plain",      "floral",   "striped", "dotted",
                                        "camouflage", "gradient", "herringbone"};

// per-purpose stream tags for deriving independent sub-rngs
enum : uint64_t {
  kStreamParams = 101,
  kStreamDots = 102,
  kStreamFloral = 103,
  kStreamCamo = 104,
  kStreamWarp = 201,
  kStreamLight = 202,
  kStreamClutter = 203,
  kStreamNoise = 204,
};

Rgb random_color(Rng& rng) {
  return Rgb{static_cast<float>(rng.next_double()), static_cast<float>(rng.next_double()),
             static_cast<float>(rng.next_double())};
}

// push one channel until the pair is separated; keeps derivation loop-free
Rgb separate_from(const Rgb& base, Rgb cand, float min_sep) {
  if (cand.linf(base) >= min_sep) return cand;
  float* ch[3] = {&cand.r, &cand.g, &cand.b};
  const float bc[3] = {base.r, base.g, base.b};
  int best = 0;
  float best_room = -1;
  for (int i = 0; i < 3; ++i) {
    float up = 1.0f - bc[i], down = bc[i];
    float room = std::max(up, down);
    if (room > best_room) {
      best_room = room;
      best = i;
    }
  }
  float up = 1.0f - bc[best], down = bc[best];
  *ch[best] = up >= down ? std::min(1.0f, bc[best] + min_sep + 0.1f)
                         : std::max(0.0f, bc[best] - min_sep - 0.1f);
  return cand;
}

inline float smoothstep(float e0, float e1, float x) {
  float t = std::clamp((x - e0) / (e1 - e0), 0.0f, 1.0f);
  return t * t * (3.0f - 2.0f * t);
}

inline void put_rgb(float* px, const Rgb& c) {
  px[0] = c.r;
  px[1] = c.g;
  px[2] = c.b;
}

inline Rgb mix_rgb(const Rgb& a, const Rgb& b, float t) {
  return Rgb{a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t};
}

// hash-based value noise on an integer lattice
float lattice_value(uint64_t seed, int64_t ix, int64_t iy) {
  uint64_t h = hash_combine(seed, hash_combine(static_cast<uint64_t>(ix) * 0x9e3779b97f4a7c15ULL,
                                               static_cast<uint64_t>(iy)));
  return static_cast<float>((splitmix64(h) >> 11) * 0x1.0p-53);
}

float value_noise(uint64_t seed, float x, float y) {
  float fx = std::floor(x), fy = std::floor(y);
  int64_t ix = static_cast<int64_t>(fx), iy = static_cast<int64_t>(fy);
  float tx = smoothstep(0.0f, 1.0f, x - fx);
  float ty = smoothstep(0.0f, 1.0f, y - fy);
  float v00 = lattice_value(seed, ix, iy);
  float v10 = lattice_value(seed, ix + 1, iy);
  float v01 = lattice_value(seed, ix, iy + 1);
  float v11 = lattice_value(seed, ix + 1, iy + 1);
  float a = v00 + (v10 - v00) * tx;
  float b = v01 + (v11 - v01) * tx;
  return a + (b - a) * ty;
}

struct Frame {
  float c, s;  // cos/sin of orientation
  // u: projection along the pattern axis, v: perpendicular
  void uv(float x, float y, float* u, float* v) const {
    *u = y * c + x * s;
    *v = -y * s + x * c;
  }
};

void render_plain(ImageF& img, const RenderParams& p) {
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) put_rgb(img.at(y, x), p.primary_color);
}

void render_striped(ImageF& img, const RenderParams& p) {
  // bands of width size/(2*scale); orientation 0 varies along rows
  Frame f{std::cos(p.orientation), std::sin(p.orientation)};
  const float half_period = static_cast<float>(img.width) / (2.0f * p.pattern_scale);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      float u, v;
      f.uv(x + 0.5f, y + 0.5f, &u, &v);
      int64_t band = static_cast<int64_t>(std::floor(u / half_period));
      bool odd = band & 1;
      put_rgb(img.at(y, x), odd ? p.secondary_color : p.primary_color);
    }
  }
}

void render_gradient(ImageF& img, const RenderParams& p) {
  Frame f{std::cos(p.orientation), std::sin(p.orientation)};
  float umin = 1e30f, umax = -1e30f;
  const float corners[4][2] = {{0.5f, 0.5f},
                               {img.width - 0.5f, 0.5f},
                               {0.5f, img.height - 0.5f},
                               {img.width - 0.5f, img.height - 0.5f}};
  for (auto& cn : corners) {
    float u, v;
    f.uv(cn[0], cn[1], &u, &v);
    umin = std::min(umin, u);
    umax = std::max(umax, u);
  }
  const float inv = 1.0f / std::max(umax - umin, 1e-6f);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      float u, v;
      f.uv(x + 0.5f, y + 0.5f, &u, &v);
      put_rgb(img.at(y, x), mix_rgb(p.primary_color, p.secondary_color, (u - umin) * inv));
    }
  }
}

void render_dotted(ImageF& img, const RenderParams& p) {
  Frame f{std::cos(p.orientation), std::sin(p.orientation)};
  const float cell = static_cast<float>(img.width) / p.pattern_scale;
  const float radius = 0.28f * cell;
  const float max_jitter = 0.22f * cell * p.element_jitter;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      float u, v;
      f.uv(x + 0.5f, y + 0.5f, &u, &v);
      Rgb out = p.primary_color;
      float best = 1e30f;
      // a dot from a neighboring cell can spill in once jittered
      int64_t cu = static_cast<int64_t>(std::floor(u / cell));
      int64_t cv = static_cast<int64_t>(std::floor(v / cell));
      for (int64_t du = -1; du <= 1; ++du) {
        for (int64_t dv = -1; dv <= 1; ++dv) {
          int64_t gu = cu + du, gv = cv + dv;
          uint64_t h = hash_combine(hash_combine(p.seed, kStreamDots),
                                    hash_combine(static_cast<uint64_t>(gu) * 0x100000001b3ULL,
                                                 static_cast<uint64_t>(gv)));
          float jx = (static_cast<float>((splitmix64(h) >> 11) * 0x1.0p-53) - 0.5f) * 2.0f;
          float jy = (static_cast<float>((splitmix64(h + 1) >> 11) * 0x1.0p-53) - 0.5f) * 2.0f;
          float cx = (gu + 0.5f) * cell + jx * max_jitter;
          float cy = (gv + 0.5f) * cell + jy * max_jitter;
          float d = std::hypot(u - cx, v - cy);
          best = std::min(best, d);
        }
      }
      float t = 1.0f - smoothstep(radius - 0.75f, radius + 0.75f, best);
      if (t > 0) out = mix_rgb(out, p.secondary_color, t);
      put_rgb(img.at(y, x), out);
    }
  }
}

void render_herringbone(ImageF& img, const RenderParams& p) {
  // mirrored diagonal stripes, direction flipping between columns
  Frame f{std::cos(p.orientation), std::sin(p.orientation)};
  const float column = static_cast<float>(img.width) / p.pattern_scale;
  const float half_period = column / 2.0f;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      float u, v;
      f.uv(x + 0.5f, y + 0.5f, &u, &v);
      int64_t col = static_cast<int64_t>(std::floor(v / column));
      float in_col = v - col * column;
      float w = (col & 1) ? u + in_col : u - in_col;
      int64_t band = static_cast<int64_t>(std::floor(w / half_period));
      put_rgb(img.at(y, x), (band & 1) ? p.secondary_color : p.primary_color);
    }
  }
}

void render_floral(ImageF& img, const RenderParams& p) {
  const float cell = static_cast<float>(img.width) / std::max(1.5f, p.pattern_scale * 0.75f);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) put_rgb(img.at(y, x), p.background_color);

  int64_t cmin = -1, cmax_x = static_cast<int64_t>(img.width / cell) + 1;
  int64_t cmax_y = static_cast<int64_t>(img.height / cell) + 1;
  for (int64_t gy = cmin; gy <= cmax_y; ++gy) {
    for (int64_t gx = cmin; gx <= cmax_x; ++gx) {
      uint64_t h = hash_combine(hash_combine(p.seed, kStreamFloral),
                                hash_combine(static_cast<uint64_t>(gx) * 0x100000001b3ULL,
                                             static_cast<uint64_t>(gy)));
      Rng cr(h);
      float cx = (gx + 0.5f + 0.55f * p.element_jitter *
                                   (static_cast<float>(cr.next_double()) - 0.5f)) *
                 cell;
      float cy = (gy + 0.5f + 0.55f * p.element_jitter *
                                   (static_cast<float>(cr.next_double()) - 0.5f)) *
                 cell;
      float phase = static_cast<float>(cr.uniform(0, 2 * kPi));
      int petals = 5 + static_cast<int>(cr.next_below(2));
      float r0 = 0.38f * cell;

      int x0 = std::max(0, static_cast<int>(cx - cell)), x1 = std::min(img.width - 1, static_cast<int>(cx + cell));
      int y0 = std::max(0, static_cast<int>(cy - cell)), y1 = std::min(img.height - 1, static_cast<int>(cy + cell));
      for (int yy = y0; yy <= y1; ++yy) {
        for (int xx = x0; xx <= x1; ++xx) {
          float dx = xx + 0.5f - cx, dy = yy + 0.5f - cy;
          float rho = std::hypot(dx, dy);
          if (rho > r0 * 1.05f) continue;
          float phi = std::atan2(dy, dx);
          // rose-curve petal boundary
          float edge = r0 * (0.55f + 0.45f * std::cos(petals * (phi - phase)));
          float* px = img.at(yy, xx);
          if (rho < 0.16f * cell) {
            put_rgb(px, p.primary_color);
          } else if (rho < edge) {
            put_rgb(px, p.secondary_color);
          }
        }
      }
    }
  }
}

void render_camouflage(ImageF& img, const RenderParams& p) {
  uint64_t seed = hash_combine(p.seed, kStreamCamo);
  Rng pal_rng(hash_combine(seed, 7));
  // 4-color palette anchored on the primary/secondary pair
  Rgb palette[4];
  palette[0] = p.primary_color;
  palette[1] = p.secondary_color;
  palette[2] = mix_rgb(p.primary_color, p.background_color, 0.6f);
  palette[3] = mix_rgb(p.secondary_color, Rgb{0.1f, 0.1f, 0.1f}, 0.5f);
  (void)pal_rng;

  const float base_freq = p.pattern_scale * 0.5f;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      float fx = (x + 0.5f) / img.width, fy = (y + 0.5f) / img.height;
      float n = 0.0f, amp = 1.0f, freq = base_freq, norm = 0.0f;
      for (int o = 0; o < 3; ++o) {
        n += amp * value_noise(hash_combine(seed, o), fx * freq, fy * freq);
        norm += amp;
        amp *= 0.5f;
        freq *= 2.0f;
      }
      n /= norm;
      int idx = std::min(3, static_cast<int>(n * 4.0f));
      put_rgb(img.at(y, x), palette[idx]);
    }
  }
}

// --- domain shift stages ---

void stage_warp(ImageF& img, float strength, Rng& rng) {
  const float amp = strength * img.width;
  const float f1 = 1.0f + static_cast<float>(rng.next_below(2));
  const float f2 = 1.0f + static_cast<float>(rng.next_below(2));
  const float ph1 = static_cast<float>(rng.uniform(0, 2 * kPi));
  const float ph2 = static_cast<float>(rng.uniform(0, 2 * kPi));
  ImageF src = img;
  auto sample = [&](float y, float x, int ch) {
    x = std::clamp(x, 0.0f, img.width - 1.0f);
    y = std::clamp(y, 0.0f, img.height - 1.0f);
    int x0 = static_cast<int>(x), y0 = static_cast<int>(y);
    int x1 = std::min(x0 + 1, img.width - 1), y1 = std::min(y0 + 1, img.height - 1);
    float tx = x - x0, ty = y - y0;
    float a = src.at(y0, x0)[ch] + (src.at(y0, x1)[ch] - src.at(y0, x0)[ch]) * tx;
    float b = src.at(y1, x0)[ch] + (src.at(y1, x1)[ch] - src.at(y1, x0)[ch]) * tx;
    return a + (b - a) * ty;
  };
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      float dx = amp * std::sin(2 * kPi * f1 * y / img.height + ph1);
      float dy = amp * std::sin(2 * kPi * f2 * x / img.width + ph2);
      for (int ch = 0; ch < 3; ++ch) img.at(y, x)[ch] = sample(y + dy, x + dx, ch);
    }
  }
}

void stage_lighting(ImageF& img, float strength, Rng& rng) {
  // catalog-style top light: mostly vertical axis with some angular jitter
  float angle = -kPi / 2.0f + static_cast<float>(rng.uniform(-kPi / 6.0, kPi / 6.0));
  float dx = std::cos(angle), dy = std::sin(angle);
  float pmin = 1e30f, pmax = -1e30f;
  const float corners[4][2] = {{0, 0},
                               {static_cast<float>(img.width - 1), 0},
                               {0, static_cast<float>(img.height - 1)},
                               {static_cast<float>(img.width - 1), static_cast<float>(img.height - 1)}};
  for (auto& cn : corners) {
    float pr = cn[0] * dx + cn[1] * dy;
    pmin = std::min(pmin, pr);
    pmax = std::max(pmax, pr);
  }
  const float inv = 1.0f / std::max(pmax - pmin, 1e-6f);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      float t = (x * dx + y * dy - pmin) * inv;
      // scales intensity in [1-strength, 1]; never clips, hue untouched
      float factor = (1.0f - strength) + strength * t;
      float* px = img.at(y, x);
      px[0] *= factor;
      px[1] *= factor;
      px[2] *= factor;
    }
  }
}

void stage_clutter(ImageF& img, float amount, Rng& rng) {
  int count = static_cast<int>(std::lround(amount * 10.0f));
  for (int i = 0; i < count; ++i) {
    // keep clutter in the outer ring so the pattern label survives
    float ring = 0.32f + 0.16f * static_cast<float>(rng.next_double());
    float theta = static_cast<float>(rng.uniform(0, 2 * kPi));
    float cx = (0.5f + ring * std::cos(theta)) * img.width;
    float cy = (0.5f + ring * std::sin(theta)) * img.height;
    float radius = static_cast<float>(rng.uniform(0.05, 0.12)) * img.width;
    Rgb color = random_color(rng);
    bool rect = rng.next_below(2) == 0;
    int x0 = std::max(0, static_cast<int>(cx - radius)), x1 = std::min(img.width - 1, static_cast<int>(cx + radius));
    int y0 = std::max(0, static_cast<int>(cy - radius)), y1 = std::min(img.height - 1, static_cast<int>(cy + radius));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        bool inside = rect || std::hypot(x + 0.5f - cx, y + 0.5f - cy) <= radius;
        if (inside) put_rgb(img.at(y, x), color);
      }
    }
  }
}

void stage_blur(ImageF& img, float sigma) {
  int radius = std::max(1, static_cast<int>(std::ceil(2.5f * sigma)));
  std::vector<float> kernel(2 * radius + 1);
  float sum = 0;
  for (int i = -radius; i <= radius; ++i) {
    float w = std::exp(-0.5f * i * i / (sigma * sigma));
    kernel[i + radius] = w;
    sum += w;
  }
  for (auto& w : kernel) w /= sum;

  ImageF tmp(img.height, img.width);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      float acc[3] = {0, 0, 0};
      for (int k = -radius; k <= radius; ++k) {
        int xx = std::clamp(x + k, 0, img.width - 1);
        const float* px = img.at(y, xx);
        float w = kernel[k + radius];
        acc[0] += w * px[0];
        acc[1] += w * px[1];
        acc[2] += w * px[2];
      }
      put_rgb(tmp.at(y, x), Rgb{acc[0], acc[1], acc[2]});
    }
  }
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      float acc[3] = {0, 0, 0};
      for (int k = -radius; k <= radius; ++k) {
        int yy = std::clamp(y + k, 0, img.height - 1);
        const float* px = tmp.at(yy, x);
        float w = kernel[k + radius];
        acc[0] += w * px[0];
        acc[1] += w * px[1];
        acc[2] += w * px[2];
      }
      put_rgb(img.at(y, x), Rgb{acc[0], acc[1], acc[2]});
    }
  }
}

void stage_noise(ImageF& img, float sigma, Rng& rng) {
  for (auto& v : img.pixels) {
    v = std::clamp(v + sigma * static_cast<float>(rng.normal()), 0.0f, 1.0f);
  }
}

}  // namespace

const char* class_name(PatternClass c) { return kClassNames[static_cast<int>(c)]; }

PatternClass class_from_id(int id) {
  if (id < 0 || id >= kNumClasses) throw ParamError("class id out of range: " + std::to_string(id));
  return static_cast<PatternClass>(id);
}

PatternClass class_from_name(const std::string& name) {
  for (int i = 0; i < kNumClasses; ++i)
    if (name == kClassNames[i]) return static_cast<PatternClass>(i);
  throw ParamError("unknown class name: " + name);
}

const char* domain_name(DomainStyle::Tag t) {
  return t == DomainStyle::Tag::kSource ? "source" : "target";
}

DomainStyle::Tag domain_from_name(const std::string& name) {
  if (name == "source") return DomainStyle::Tag::kSource;
  if (name == "target") return DomainStyle::Tag::kTarget;
  throw ParamError("unknown domain: " + name + " (expected source|target)");
}

DomainStyle DomainStyle::target_default() {
  // strong enough that a source-only classifier measurably fails, mild
  // enough that the classes stay separable for a classifier trained on it.
  // The ramp and blur dominate; both are deterministic transforms, so a
  // translation model can actually close this gap.
  DomainStyle s;
  s.tag = Tag::kTarget;
  s.distortion.blur_sigma = 0.8f;
  s.distortion.warp_strength = 0.03f;
  s.distortion.lighting_gradient = 0.55f;
  s.distortion.background_clutter = 0.10f;
  s.distortion.noise_sigma = 0.0f;
  return s;
}

void DomainStyle::validate() const {
  const Distortion& d = distortion;
  if (d.blur_sigma < 0 || d.noise_sigma < 0) throw ParamError("distortion sigmas must be >= 0");
  if (d.warp_strength < 0 || d.warp_strength > 0.2f)
    throw ParamError("warp_strength must be in [0, 0.2]");
  if (d.lighting_gradient < 0 || d.lighting_gradient > 1 || d.background_clutter < 0 ||
      d.background_clutter > 1)
    throw ParamError("lighting_gradient and background_clutter must be in [0,1]");
  if (tag == Tag::kSource && !d.is_identity())
    throw ParamError("source style must have zero distortion");
  if (tag == Tag::kTarget && d.num_active() < 2)
    throw ParamError("target style needs at least two active distortions");
}

RenderParams RenderParams::from_seed(uint64_t seed, PatternClass c) {
  Rng rng(hash_combine(seed, hash_combine(kStreamParams, static_cast<uint64_t>(c))));
  RenderParams p;
  p.seed = seed;
  // capped so one half-period stays several pixels wide at small renders;
  // finer texture does not survive the target style's blur
  p.pattern_scale = static_cast<float>(rng.uniform(2.0, 4.5));
  p.primary_color = random_color(rng);
  p.secondary_color = separate_from(p.primary_color, random_color(rng), kMinColorSeparation);
  p.orientation = static_cast<float>(rng.uniform(0.0, kPi * 0.999999));
  p.background_color = random_color(rng);
  p.element_jitter = static_cast<float>(rng.next_double());
  return p;
}

void RenderParams::validate() const {
  if (!(pattern_scale > 0)) throw ParamError("pattern_scale must be positive");
  if (orientation < 0 || orientation >= kPi) throw ParamError("orientation must be in [0, pi)");
  if (element_jitter < 0 || element_jitter > 1) throw ParamError("element_jitter must be in [0,1]");
  auto in_unit = [](const Rgb& c) {
    return c.r >= 0 && c.r <= 1 && c.g >= 0 && c.g <= 1 && c.b >= 0 && c.b <= 1;
  };
  if (!in_unit(primary_color) || !in_unit(secondary_color) || !in_unit(background_color))
    throw ParamError("colors must lie in [0,1]^3");
  if (primary_color.linf(secondary_color) < kMinColorSeparation)
    throw ParamError("primary and secondary colors are too close (< 0.15 L-inf)");
}

LabeledImage render_pattern(PatternClass c, const RenderParams& params, int size) {
  if (size < 16) throw ParamError("image size must be >= 16");
  params.validate();
  ImageF img(size, size);
  switch (c) {
    case PatternClass::kPlain: render_plain(img, params); break;
    case PatternClass::kFloral: render_floral(img, params); break;
    case PatternClass::kStriped: render_striped(img, params); break;
    case PatternClass::kDotted: render_dotted(img, params); break;
    case PatternClass::kCamouflage: render_camouflage(img, params); break;
    case PatternClass::kGradient: render_gradient(img, params); break;
    case PatternClass::kHerringbone: render_herringbone(img, params); break;
  }
  LabeledImage out;
  out.pixels = img.quantize();
  out.class_id = static_cast<int>(c);
  out.domain = DomainStyle::Tag::kSource;
  out.seed = params.seed;
  return out;
}

LabeledImage apply_domain_shift(const LabeledImage& img, const DomainStyle& style,
                                uint64_t shift_seed) {
  style.validate();
  const Distortion& d = style.distortion;
  ImageF work = ImageF::from_u8(img.pixels);
  if (d.warp_strength > 0) {
    Rng rng(hash_combine(shift_seed, kStreamWarp));
    stage_warp(work, d.warp_strength, rng);
  }
  if (d.lighting_gradient > 0) {
    Rng rng(hash_combine(shift_seed, kStreamLight));
    stage_lighting(work, d.lighting_gradient, rng);
  }
  if (d.background_clutter > 0) {
    Rng rng(hash_combine(shift_seed, kStreamClutter));
    stage_clutter(work, d.background_clutter, rng);
  }
  if (d.blur_sigma > 0) stage_blur(work, d.blur_sigma);
  if (d.noise_sigma > 0) {
    Rng rng(hash_combine(shift_seed, kStreamNoise));
    stage_noise(work, d.noise_sigma, rng);
  }
  LabeledImage out;
  out.pixels = work.quantize();
  out.class_id = img.class_id;
  out.seed = img.seed;
  out.domain = style.tag;
  out.path = img.path;
  return out;
}

}  // namespace fashioncut
