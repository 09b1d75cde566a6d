#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

namespace xoff {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
};

// 8-bit RGB raster with just enough drawing for charts.
class Image {
 public:
  Image(int width, int height, Rgb background = {255, 255, 255});

  int width() const { return width_; }
  int height() const { return height_; }
  Rgb at(int x, int y) const;

  void set(int x, int y, Rgb c);
  void fill_rect(int x, int y, int w, int h, Rgb c);
  void line(int x0, int y0, int x1, int y1, Rgb c, int thickness = 1);
  // 5x7 glyphs scaled by `scale`; lowercase is drawn as uppercase.
  void text(int x, int y, std::string_view s, Rgb c, int scale = 1);
  static int text_width(std::string_view s, int scale = 1);

  const std::vector<std::uint8_t>& pixels() const { return pixels_; }

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> pixels_;
};

std::vector<std::uint8_t> encode_png(const Image& image);
void write_png(const Image& image, const std::filesystem::path& file);

}  // namespace xoff
