#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "picbox/geometry.hpp"

namespace picbox {

// Single-channel intensity raster, row-major, values in [0,255].
struct GrayFrame {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  GrayFrame() = default;
  GrayFrame(int w, int h, std::uint8_t fill = 0);
  GrayFrame(int w, int h, std::vector<std::uint8_t> pixels);

  std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  PixelRect bounds() const { return PixelRect{0, 0, width, height}; }
  bool contains_point(double x, double y) const {
    return x >= 0.0 && y >= 0.0 && x < width && y < height;
  }
};

// Interleaved RGB raster. The constructor rejects channel/size mismatches.
struct RgbFrame {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // r,g,b per pixel

  RgbFrame() = default;
  RgbFrame(int w, int h);
  RgbFrame(int w, int h, std::vector<std::uint8_t> rgb);

  const std::uint8_t* pixel(int x, int y) const {
    return data.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
  std::uint8_t* pixel(int x, int y) {
    return data.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
};

// Rec.601 luma, computed in integer arithmetic so the half-up rounding is
// exact: (299 R + 587 G + 114 B + 500) / 1000.
GrayFrame to_gray(const RgbFrame& rgb);
std::uint8_t luma601(std::uint8_t r, std::uint8_t g, std::uint8_t b);

// Intersects rect with the frame. Throws OutsideFrameError when the
// intersection is empty. Throws std::invalid_argument on degenerate rects.
PixelRect clip_rect(const PixelRect& rect, const GrayFrame& frame);

// Exact integer sum of intensities inside a clipped rect.
std::int64_t region_sum(const GrayFrame& frame, const PixelRect& rect);

// Arithmetic mean over a clipped, non-empty rect: one 64-bit sum, one divide.
double region_mean(const GrayFrame& frame, const PixelRect& rect);

// Overlay helpers used by the render path. Coordinates are clipped to the
// frame; `rgb` is the outline colour.
void draw_rect_outline(RgbFrame& frame, const PixelRect& rect, std::array<std::uint8_t, 3> rgb);
void draw_polygon_outline(RgbFrame& frame, const std::vector<std::pair<double, double>>& vertices,
                          std::array<std::uint8_t, 3> rgb);
RgbFrame gray_to_rgb(const GrayFrame& gray);

}  // namespace picbox
