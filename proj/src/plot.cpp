#include "curricula/plot.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

namespace curricula {

namespace {

// Classic 5x7 column font, bit 0 = top row.
const std::map<char, std::array<uint8_t, 5>> kFont = {
    {' ', {0x00, 0x00, 0x00, 0x00, 0x00}}, {'0', {0x3e, 0x51, 0x49, 0x45, 0x3e}},
    {'1', {0x00, 0x42, 0x7f, 0x40, 0x00}}, {'2', {0x42, 0x61, 0x51, 0x49, 0x46}},
    {'3', {0x21, 0x41, 0x45, 0x4b, 0x31}}, {'4', {0x18, 0x14, 0x12, 0x7f, 0x10}},
    {'5', {0x27, 0x45, 0x45, 0x45, 0x39}}, {'6', {0x3c, 0x4a, 0x49, 0x49, 0x30}},
    {'7', {0x01, 0x71, 0x09, 0x05, 0x03}}, {'8', {0x36, 0x49, 0x49, 0x49, 0x36}},
    {'9', {0x06, 0x49, 0x49, 0x29, 0x1e}}, {'.', {0x00, 0x60, 0x60, 0x00, 0x00}},
    {',', {0x00, 0x50, 0x30, 0x00, 0x00}}, {'-', {0x08, 0x08, 0x08, 0x08, 0x08}},
    {'+', {0x08, 0x08, 0x3e, 0x08, 0x08}}, {'_', {0x40, 0x40, 0x40, 0x40, 0x40}},
    {'=', {0x14, 0x14, 0x14, 0x14, 0x14}}, {':', {0x00, 0x36, 0x36, 0x00, 0x00}},
    {'%', {0x23, 0x13, 0x08, 0x64, 0x62}}, {'/', {0x20, 0x10, 0x08, 0x04, 0x02}},
    {'(', {0x00, 0x1c, 0x22, 0x41, 0x00}}, {')', {0x00, 0x41, 0x22, 0x1c, 0x00}},
    {'A', {0x7e, 0x11, 0x11, 0x11, 0x7e}}, {'B', {0x7f, 0x49, 0x49, 0x49, 0x36}},
    {'C', {0x3e, 0x41, 0x41, 0x41, 0x22}}, {'D', {0x7f, 0x41, 0x41, 0x22, 0x1c}},
    {'E', {0x7f, 0x49, 0x49, 0x49, 0x41}}, {'F', {0x7f, 0x09, 0x09, 0x09, 0x01}},
    {'G', {0x3e, 0x41, 0x49, 0x49, 0x7a}}, {'H', {0x7f, 0x08, 0x08, 0x08, 0x7f}},
    {'I', {0x00, 0x41, 0x7f, 0x41, 0x00}}, {'J', {0x20, 0x40, 0x41, 0x3f, 0x01}},
    {'K', {0x7f, 0x08, 0x14, 0x22, 0x41}}, {'L', {0x7f, 0x40, 0x40, 0x40, 0x40}},
    {'M', {0x7f, 0x02, 0x0c, 0x02, 0x7f}}, {'N', {0x7f, 0x04, 0x08, 0x10, 0x7f}},
    {'O', {0x3e, 0x41, 0x41, 0x41, 0x3e}}, {'P', {0x7f, 0x09, 0x09, 0x09, 0x06}},
    {'Q', {0x3e, 0x41, 0x51, 0x21, 0x5e}}, {'R', {0x7f, 0x09, 0x19, 0x29, 0x46}},
    {'S', {0x46, 0x49, 0x49, 0x49, 0x31}}, {'T', {0x01, 0x01, 0x7f, 0x01, 0x01}},
    {'U', {0x3f, 0x40, 0x40, 0x40, 0x3f}}, {'V', {0x1f, 0x20, 0x40, 0x20, 0x1f}},
    {'W', {0x3f, 0x40, 0x38, 0x40, 0x3f}}, {'X', {0x63, 0x14, 0x08, 0x14, 0x63}},
    {'Y', {0x07, 0x08, 0x70, 0x08, 0x07}}, {'Z', {0x61, 0x51, 0x49, 0x45, 0x43}},
};

void push_u32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back((v >> 24) & 0xff);
  out.push_back((v >> 16) & 0xff);
  out.push_back((v >> 8) & 0xff);
  out.push_back(v & 0xff);
}

void push_chunk(std::vector<uint8_t>& out, const char type[4], const std::vector<uint8_t>& data) {
  push_u32(out, static_cast<uint32_t>(data.size()));
  const size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  const uint32_t crc =
      crc32(0, out.data() + start, static_cast<uInt>(out.size() - start));
  push_u32(out, crc);
}

std::string trimmed_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

}  // namespace

Image::Image(int w, int h, std::array<uint8_t, 3> fill) : width(w), height(h) {
  rgb.resize(static_cast<size_t>(w) * h * 3);
  for (int i = 0; i < w * h; ++i) {
    rgb[3 * i] = fill[0];
    rgb[3 * i + 1] = fill[1];
    rgb[3 * i + 2] = fill[2];
  }
}

void Image::set(int x, int y, std::array<uint8_t, 3> c) {
  if (x < 0 || y < 0 || x >= width || y >= height) return;
  const size_t i = 3 * (static_cast<size_t>(y) * width + x);
  rgb[i] = c[0];
  rgb[i + 1] = c[1];
  rgb[i + 2] = c[2];
}

void Image::fill_rect(int x0, int y0, int x1, int y1, std::array<uint8_t, 3> c) {
  for (int y = std::max(0, y0); y <= std::min(height - 1, y1); ++y)
    for (int x = std::max(0, x0); x <= std::min(width - 1, x1); ++x) set(x, y, c);
}

void Image::line(int x0, int y0, int x1, int y1, std::array<uint8_t, 3> c) {
  const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    set(x0, y0, c);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
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

void Image::text(int x, int y, const std::string& s, std::array<uint8_t, 3> c, int scale) {
  int cx = x;
  for (char raw : s) {
    const char ch = static_cast<char>(std::toupper(static_cast<unsigned char>(raw)));
    const auto it = kFont.find(ch);
    if (it != kFont.end()) {
      for (int col = 0; col < 5; ++col)
        for (int row = 0; row < 7; ++row)
          if (it->second[col] & (1 << row))
            fill_rect(cx + col * scale, y + row * scale, cx + col * scale + scale - 1,
                      y + row * scale + scale - 1, c);
    }
    cx += 6 * scale;
  }
}

void write_png(const std::string& path, const Image& image) {
  // Scanlines with filter byte 0, zlib-compressed.
  std::vector<uint8_t> raw;
  raw.reserve(static_cast<size_t>(image.height) * (image.width * 3 + 1));
  for (int y = 0; y < image.height; ++y) {
    raw.push_back(0);
    const uint8_t* row = &image.rgb[3 * static_cast<size_t>(y) * image.width];
    raw.insert(raw.end(), row, row + 3 * image.width);
  }
  uLongf comp_len = compressBound(static_cast<uLong>(raw.size()));
  std::vector<uint8_t> compressed(comp_len);
  if (compress2(compressed.data(), &comp_len, raw.data(), static_cast<uLong>(raw.size()), 6) !=
      Z_OK)
    throw std::runtime_error("write_png: compression failed");
  compressed.resize(comp_len);

  std::vector<uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  std::vector<uint8_t> ihdr;
  push_u32(ihdr, static_cast<uint32_t>(image.width));
  push_u32(ihdr, static_cast<uint32_t>(image.height));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(2);  // truecolor
  ihdr.push_back(0);
  ihdr.push_back(0);
  ihdr.push_back(0);
  push_chunk(out, "IHDR", ihdr);
  push_chunk(out, "IDAT", compressed);
  push_chunk(out, "IEND", {});

  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_png: cannot open '" + path + "'");
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
}

std::array<uint8_t, 3> palette_color(int index) {
  static const std::array<std::array<uint8_t, 3>, 8> kPalette = {{{31, 119, 180},
                                                                  {255, 127, 14},
                                                                  {44, 160, 44},
                                                                  {214, 39, 40},
                                                                  {148, 103, 189},
                                                                  {140, 86, 75},
                                                                  {227, 119, 194},
                                                                  {127, 127, 127}}};
  return kPalette[index % kPalette.size()];
}

namespace {

struct Frame {
  int x0, y0, x1, y1;  // plot area in pixels
  double xmin, xmax, ymin, ymax;
  int px(double x) const {
    return x0 + static_cast<int>(std::lround((x - xmin) / (xmax - xmin + 1e-300) * (x1 - x0)));
  }
  int py(double y) const {
    return y1 - static_cast<int>(std::lround((y - ymin) / (ymax - ymin + 1e-300) * (y1 - y0)));
  }
};

Frame draw_axes(Image& img, const std::string& title, const std::string& x_label,
                double xmin, double xmax, double ymin, double ymax) {
  if (xmax <= xmin) xmax = xmin + 1.0;
  if (ymax <= ymin) ymax = ymin + 1.0;
  Frame f{70, 40, img.width - 20, img.height - 45, xmin, xmax, ymin, ymax};
  const std::array<uint8_t, 3> black = {0, 0, 0}, grey = {210, 210, 210};
  img.text(f.x0, 14, title, black);
  for (int i = 0; i <= 5; ++i) {
    const double xv = xmin + (xmax - xmin) * i / 5.0;
    const double yv = ymin + (ymax - ymin) * i / 5.0;
    const int px = f.px(xv), py = f.py(yv);
    img.line(px, f.y0, px, f.y1, grey);
    img.line(f.x0, py, f.x1, py, grey);
    img.text(px - 10, f.y1 + 8, trimmed_number(xv), black);
    img.text(4, py - 3, trimmed_number(yv), black);
  }
  img.line(f.x0, f.y1, f.x1, f.y1, black);
  img.line(f.x0, f.y0, f.x0, f.y1, black);
  img.text((f.x0 + f.x1) / 2 - 3 * static_cast<int>(x_label.size()), img.height - 14, x_label,
           black);
  return f;
}

}  // namespace

void render_line_chart(const std::string& path, const std::string& title,
                       const std::string& x_label, const std::string& y_label,
                       const std::vector<DataSeries>& series) {
  Image img(900, 480);
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series)
    for (size_t i = 0; i < s.x.size(); ++i) {
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  if (xmin > xmax) {
    xmin = 0;
    xmax = 1;
    ymin = 0;
    ymax = 1;
  }
  const double pad = (ymax - ymin) * 0.05 + 1e-9;
  Frame f = draw_axes(img, title + "  (" + y_label + ")", x_label, xmin, xmax, ymin - pad,
                      ymax + pad);
  int legend_x = f.x0 + 8;
  for (size_t s = 0; s < series.size(); ++s) {
    const auto color = palette_color(static_cast<int>(s));
    const auto& sr = series[s];
    for (size_t i = 1; i < sr.x.size(); ++i)
      img.line(f.px(sr.x[i - 1]), f.py(sr.y[i - 1]), f.px(sr.x[i]), f.py(sr.y[i]), color);
    img.fill_rect(legend_x, 26, legend_x + 8, 34, color);
    img.text(legend_x + 12, 27, sr.label, {0, 0, 0});
    legend_x += 26 + 6 * static_cast<int>(sr.label.size());
  }
  write_png(path, img);
}

void render_stacked_area(const std::string& path, const std::string& title,
                         const std::string& x_label, const std::vector<double>& x,
                         const std::vector<std::vector<double>>& stacks,
                         const std::vector<std::string>& labels) {
  if (stacks.empty() || x.empty()) throw std::invalid_argument("render_stacked_area: no data");
  Image img(900, 480);
  Frame f = draw_axes(img, title, x_label, x.front(), x.back(), 0.0, 1.0);

  // Paint per pixel column: interpolate the cumulative stack heights.
  for (int px = f.x0; px <= f.x1; ++px) {
    const double xv = f.xmin + (f.xmax - f.xmin) * (px - f.x0) / std::max(1, f.x1 - f.x0);
    size_t hi = 1;
    while (hi < x.size() - 1 && x[hi] < xv) ++hi;
    const size_t lo = hi - 1;
    const double w = x[hi] == x[lo] ? 0.0 : (xv - x[lo]) / (x[hi] - x[lo]);
    double base = 0.0;
    for (size_t s = 0; s < stacks.size(); ++s) {
      const double v = stacks[s][lo] * (1 - w) + stacks[s][hi] * w;
      const int y_top = f.py(std::min(1.0, base + v));
      const int y_bot = f.py(base);
      if (y_top < y_bot) img.fill_rect(px, y_top, px, y_bot, palette_color(static_cast<int>(s)));
      base += v;
    }
  }
  int legend_x = f.x0 + 8;
  for (size_t s = 0; s < labels.size(); ++s) {
    img.fill_rect(legend_x, 26, legend_x + 8, 34, palette_color(static_cast<int>(s)));
    img.text(legend_x + 12, 27, labels[s], {0, 0, 0});
    legend_x += 26 + 6 * static_cast<int>(labels[s].size());
  }
  write_png(path, img);
}

}  // namespace curricula
