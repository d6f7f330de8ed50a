#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace curricula {

struct Image {
  int width = 0, height = 0;
  std::vector<uint8_t> rgb;

  Image(int w, int h, std::array<uint8_t, 3> fill = {255, 255, 255});
  void set(int x, int y, std::array<uint8_t, 3> c);
  void fill_rect(int x0, int y0, int x1, int y1, std::array<uint8_t, 3> c);
  void line(int x0, int y0, int x1, int y1, std::array<uint8_t, 3> c);
  // 5x7 raster text (letters render uppercase); scale integer-multiplies.
  void text(int x, int y, const std::string& s, std::array<uint8_t, 3> c, int scale = 1);
};

void write_png(const std::string& path, const Image& image);

struct DataSeries {
  std::string label;
  std::vector<double> x, y;
};

void render_line_chart(const std::string& path, const std::string& title,
                       const std::string& x_label, const std::string& y_label,
                       const std::vector<DataSeries>& series);

// Stacked area chart of non-negative series (e.g. a probability simplex over
// time); stacks[s][i] is series s at x[i].
void render_stacked_area(const std::string& path, const std::string& title,
                         const std::string& x_label, const std::vector<double>& x,
                         const std::vector<std::vector<double>>& stacks,
                         const std::vector<std::string>& labels);

std::array<uint8_t, 3> palette_color(int index);

}  // namespace curricula
