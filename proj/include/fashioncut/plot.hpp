#pragma once

#include <string>
#include <vector>

#include "fashioncut/image.hpp"

namespace fashioncut {

struct BarDatum {
  std::string label;
  double value;  // in [0,1]
};

struct CurvePoint {
  double x;
  double y;
};

// 5x7 bitmap text, lowercase + digits + a little punctuation.
void draw_text(ImageU8& img, int y, int x, const std::string& text, uint8_t r, uint8_t g,
               uint8_t b, int scale = 1);

void render_bar_chart(const std::vector<BarDatum>& data, const std::string& title,
                      const std::string& out_png);

void render_curve_chart(const std::vector<CurvePoint>& points, const std::string& x_label,
                        const std::string& y_label, const std::string& out_png);

// n-column, 2-row montage: originals over their translations.
ImageU8 make_preview_grid(const std::vector<ImageU8>& top, const std::vector<ImageU8>& bottom,
                          int gutter = 2);

}  // namespace fashioncut
