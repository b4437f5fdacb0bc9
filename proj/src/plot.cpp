#include "fashioncut/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

namespace fashioncut {

namespace {

struct Glyph {
  char ch;
  const char* rows[7];
};

const Glyph kGlyphs[] = {
    {'0', {" ### ", "#   #", "#  ##", "# # #", "##  #", "#   #", " ### "}},
    {'1', {"  #  ", " ##  ", "  #  ", "  #  ", "  #  ", "  #  ", " ### "}},
    {'2', {" ### ", "#   #", "    #", "   # ", "  #  ", " #   ", "#####"}},
    {'3', {" ### ", "#   #", "    #", "  ## ", "    #", "#   #", " ### "}},
    {'4', {"   # ", "  ## ", " # # ", "#  # ", "#####", "   # ", "   # "}},
    {'5', {"#####", "#    ", "#### ", "    #", "    #", "#   #", " ### "}},
    {'6', {" ### ", "#    ", "#    ", "#### ", "#   #", "#   #", " ### "}},
    {'7', {"#####", "    #", "   # ", "  #  ", "  #  ", "  #  ", "  #  "}},
    {'8', {" ### ", "#   #", "#   #", " ### ", "#   #", "#   #", " ### "}},
    {'9', {" ### ", "#   #", "#   #", " ####", "    #", "    #", " ### "}},
    {'a', {"     ", "     ", " ### ", "    #", " ####", "#   #", " ####"}},
    {'b', {"#    ", "#    ", "#### ", "#   #", "#   #", "#   #", "#### "}},
    {'c', {"     ", "     ", " ####", "#    ", "#    ", "#    ", " ####"}},
    {'d', {"    #", "    #", " ####", "#   #", "#   #", "#   #", " ####"}},
    {'e', {"     ", "     ", " ### ", "#   #", "#####", "#    ", " ### "}},
    {'f', {"  ## ", " #   ", "#### ", " #   ", " #   ", " #   ", " #   "}},
    {'g', {"     ", " ####", "#   #", "#   #", " ####", "    #", " ### "}},
    {'h', {"#    ", "#    ", "#### ", "#   #", "#   #", "#   #", "#   #"}},
    {'i', {"  #  ", "     ", " ##  ", "  #  ", "  #  ", "  #  ", " ### "}},
    {'j', {"   # ", "     ", "  ## ", "   # ", "   # ", "#  # ", " ##  "}},
    {'k', {"#    ", "#    ", "#  # ", "# #  ", "##   ", "# #  ", "#  # "}},
    {'l', {" ##  ", "  #  ", "  #  ", "  #  ", "  #  ", "  #  ", " ### "}},
    {'m', {"     ", "     ", "## # ", "# # #", "# # #", "# # #", "# # #"}},
    {'n', {"     ", "     ", "#### ", "#   #", "#   #", "#   #", "#   #"}},
    {'o', {"     ", "     ", " ### ", "#   #", "#   #", "#   #", " ### "}},
    {'p', {"     ", "#### ", "#   #", "#   #", "#### ", "#    ", "#    "}},
    {'q', {"     ", " ####", "#   #", "#   #", " ####", "    #", "    #"}},
    {'r', {"     ", "     ", "# ## ", "##   ", "#    ", "#    ", "#    "}},
    {'s', {"     ", "     ", " ####", "#    ", " ### ", "    #", "#### "}},
    {'t', {" #   ", " #   ", "#### ", " #   ", " #   ", " #   ", "  ## "}},
    {'u', {"     ", "     ", "#   #", "#   #", "#   #", "#   #", " ####"}},
    {'v', {"     ", "     ", "#   #", "#   #", "#   #", " # # ", "  #  "}},
    {'w', {"     ", "     ", "#   #", "# # #", "# # #", "# # #", " # # "}},
    {'x', {"     ", "     ", "#   #", " # # ", "  #  ", " # # ", "#   #"}},
    {'y', {"     ", "#   #", "#   #", " ####", "    #", "#   #", " ### "}},
    {'z', {"     ", "     ", "#####", "   # ", "  #  ", " #   ", "#####"}},
    {'.', {"     ", "     ", "     ", "     ", "     ", " ##  ", " ##  "}},
    {'_', {"     ", "     ", "     ", "     ", "     ", "     ", "#####"}},
    {'-', {"     ", "     ", "     ", " ### ", "     ", "     ", "     "}},
    {':', {"     ", " ##  ", " ##  ", "     ", " ##  ", " ##  ", "     "}},
    {'/', {"    #", "    #", "   # ", "  #  ", " #   ", "#    ", "#    "}},
    {'%', {"##   ", "##  #", "   # ", "  #  ", " #   ", "#  ##", "   ##"}},
    {' ', {"     ", "     ", "     ", "     ", "     ", "     ", "     "}},
};

const Glyph* find_glyph(char c) {
  for (const auto& g : kGlyphs)
    if (g.ch == c) return &g;
  return nullptr;
}

void put_px(ImageU8& img, int y, int x, uint8_t r, uint8_t g, uint8_t b) {
  if (y < 0 || y >= img.height || x < 0 || x >= img.width) return;
  uint8_t* p = img.at(y, x);
  p[0] = r;
  p[1] = g;
  p[2] = b;
}

void fill_rect(ImageU8& img, int y0, int x0, int y1, int x1, uint8_t r, uint8_t g, uint8_t b) {
  for (int y = std::max(0, y0); y <= std::min(img.height - 1, y1); ++y)
    for (int x = std::max(0, x0); x <= std::min(img.width - 1, x1); ++x) {
      uint8_t* p = img.at(y, x);
      p[0] = r;
      p[1] = g;
      p[2] = b;
    }
}

void draw_line(ImageU8& img, int y0, int x0, int y1, int x1, uint8_t r, uint8_t g, uint8_t b) {
  int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
  int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  for (;;) {
    put_px(img, y0, x0, r, g, b);
    if (x0 == x1 && y0 == y1) break;
    int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

std::string format_num(double v) {
  char buf[32];
  if (std::abs(v - std::round(v)) < 1e-9 && std::abs(v) < 1e7)
    std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(std::llround(v)));
  else
    std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

void draw_text(ImageU8& img, int y, int x, const std::string& text, uint8_t r, uint8_t g,
               uint8_t b, int scale) {
  int cx = x;
  for (char raw : text) {
    char c = raw;
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    const Glyph* glyph = find_glyph(c);
    if (glyph) {
      for (int gy = 0; gy < 7; ++gy)
        for (int gx = 0; gx < 5; ++gx)
          if (glyph->rows[gy][gx] == '#')
            for (int sy = 0; sy < scale; ++sy)
              for (int sx = 0; sx < scale; ++sx)
                put_px(img, y + gy * scale + sy, cx + gx * scale + sx, r, g, b);
    }
    cx += 6 * scale;
  }
}

void render_bar_chart(const std::vector<BarDatum>& data, const std::string& title,
                      const std::string& out_png) {
  const int W = 640, H = 400;
  const int left = 56, right = 20, top = 40, bottom = 48;
  ImageU8 img(H, W);
  std::fill(img.pixels.begin(), img.pixels.end(), 255);
  draw_text(img, 12, left, title, 30, 30, 30);

  const int x0 = left, x1 = W - right, y0 = H - bottom, y1 = top + 12;
  draw_line(img, y0, x0, y0, x1, 60, 60, 60);
  draw_line(img, y0, x0, y1, x0, 60, 60, 60);
  for (int i = 0; i <= 4; ++i) {
    double frac = i / 4.0;
    int y = y0 - static_cast<int>(frac * (y0 - y1));
    draw_line(img, y, x0 - 3, y, x0, 60, 60, 60);
    draw_text(img, y - 3, 8, format_num(frac), 60, 60, 60);
    if (i > 0) draw_line(img, y, x0 + 1, y, x1, 225, 225, 225);
  }

  if (!data.empty()) {
    const int n = static_cast<int>(data.size());
    const int span = (x1 - x0) / n;
    for (int i = 0; i < n; ++i) {
      const int bx0 = x0 + i * span + span / 6;
      const int bx1 = x0 + (i + 1) * span - span / 6;
      const double v = std::clamp(data[static_cast<size_t>(i)].value, 0.0, 1.0);
      const int by = y0 - static_cast<int>(v * (y0 - y1));
      fill_rect(img, by, bx0, y0 - 1, bx1, 70, 110, 190);
      draw_text(img, by - 10, (bx0 + bx1) / 2 - 12, format_num(v), 30, 30, 30);
      // wrap long method names across two rows
      const std::string& label = data[static_cast<size_t>(i)].label;
      int avail = span / 6;
      if (static_cast<int>(label.size()) <= avail) {
        draw_text(img, y0 + 6, (bx0 + bx1) / 2 - 3 * static_cast<int>(label.size()), label, 30,
                  30, 30);
      } else {
        std::string a = label.substr(0, static_cast<size_t>(avail));
        std::string b = label.substr(static_cast<size_t>(avail));
        draw_text(img, y0 + 6, (bx0 + bx1) / 2 - 3 * static_cast<int>(a.size()), a, 30, 30, 30);
        draw_text(img, y0 + 16, (bx0 + bx1) / 2 - 3 * static_cast<int>(b.size()), b, 30, 30, 30);
      }
    }
  }
  write_png(out_png, img);
}

void render_curve_chart(const std::vector<CurvePoint>& points, const std::string& x_label,
                        const std::string& y_label, const std::string& out_png) {
  const int W = 640, H = 400;
  const int left = 56, right = 20, top = 28, bottom = 48;
  ImageU8 img(H, W);
  std::fill(img.pixels.begin(), img.pixels.end(), 255);

  const int x0 = left, x1 = W - right, y0 = H - bottom, y1 = top;
  draw_line(img, y0, x0, y0, x1, 60, 60, 60);
  draw_line(img, y0, x0, y1, x0, 60, 60, 60);
  draw_text(img, H - 12, (x0 + x1) / 2 - 3 * static_cast<int>(x_label.size()), x_label, 30, 30,
            30);
  draw_text(img, 8, 8, y_label, 30, 30, 30);

  for (int i = 0; i <= 4; ++i) {
    double frac = i / 4.0;
    int y = y0 - static_cast<int>(frac * (y0 - y1));
    draw_line(img, y, x0 - 3, y, x0, 60, 60, 60);
    draw_text(img, y - 3, 8, format_num(frac), 60, 60, 60);
    if (i > 0) draw_line(img, y, x0 + 1, y, x1, 225, 225, 225);
  }

  if (!points.empty()) {
    double xmin = points[0].x, xmax = points[0].x;
    for (const auto& p : points) {
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
    }
    if (xmax <= xmin) xmax = xmin + 1;
    auto to_px = [&](const CurvePoint& p) {
      int px = x0 + static_cast<int>((p.x - xmin) / (xmax - xmin) * (x1 - x0));
      int py = y0 - static_cast<int>(std::clamp(p.y, 0.0, 1.0) * (y0 - y1));
      return std::pair<int, int>(py, px);
    };
    for (size_t i = 0; i + 1 < points.size(); ++i) {
      auto [ay, ax] = to_px(points[i]);
      auto [by, bx] = to_px(points[i + 1]);
      draw_line(img, ay, ax, by, bx, 190, 80, 70);
    }
    for (const auto& p : points) {
      auto [py, px] = to_px(p);
      fill_rect(img, py - 2, px - 2, py + 2, px + 2, 150, 40, 40);
      draw_text(img, y0 + 6, px - 3 * static_cast<int>(format_num(p.x).size()), format_num(p.x),
                60, 60, 60);
    }
  }
  write_png(out_png, img);
}

ImageU8 make_preview_grid(const std::vector<ImageU8>& top, const std::vector<ImageU8>& bottom,
                          int gutter) {
  if (top.empty() || top.size() != bottom.size())
    throw std::invalid_argument("preview grid needs equal non-empty rows");
  const int tile = top[0].width;
  const int n = static_cast<int>(top.size());
  ImageU8 grid(2 * tile + 3 * gutter, n * tile + (n + 1) * gutter);
  std::fill(grid.pixels.begin(), grid.pixels.end(), 24);
  auto blit = [&](const ImageU8& src, int oy, int ox) {
    for (int y = 0; y < src.height; ++y)
      std::copy(src.at(y, 0), src.at(y, 0) + src.width * 3, grid.at(oy + y, ox));
  };
  for (int i = 0; i < n; ++i) {
    blit(top[static_cast<size_t>(i)], gutter, gutter + i * (tile + gutter));
    blit(bottom[static_cast<size_t>(i)], tile + 2 * gutter, gutter + i * (tile + gutter));
  }
  return grid;
}

}  // namespace fashioncut
