#include "picbox/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace picbox {

namespace {

void check_dims(int width, int height) {
  if (width < 1 || height < 1) {
    throw std::invalid_argument("frame dimensions must be positive, got " +
                                std::to_string(width) + "x" + std::to_string(height));
  }
}

}  // namespace

GrayFrame::GrayFrame(int w, int h, std::uint8_t fill) : width(w), height(h) {
  check_dims(w, h);
  data.assign(static_cast<std::size_t>(w) * h, fill);
}

GrayFrame::GrayFrame(int w, int h, std::vector<std::uint8_t> pixels)
    : width(w), height(h), data(std::move(pixels)) {
  check_dims(w, h);
  if (data.size() != static_cast<std::size_t>(w) * h) {
    throw std::invalid_argument("pixel buffer size does not match frame dimensions");
  }
}

RgbFrame::RgbFrame(int w, int h) : width(w), height(h) {
  check_dims(w, h);
  data.assign(static_cast<std::size_t>(w) * h * 3, 0);
}

RgbFrame::RgbFrame(int w, int h, std::vector<std::uint8_t> rgb)
    : width(w), height(h), data(std::move(rgb)) {
  check_dims(w, h);
  if (data.size() != static_cast<std::size_t>(w) * h * 3) {
    throw std::invalid_argument("rgb buffer size does not match frame dimensions");
  }
}

std::uint8_t luma601(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const int y = (299 * r + 587 * g + 114 * b + 500) / 1000;
  return static_cast<std::uint8_t>(y);
}

GrayFrame to_gray(const RgbFrame& rgb) {
  GrayFrame gray(rgb.width, rgb.height);
  const std::uint8_t* src = rgb.data.data();
  for (std::uint8_t& dst : gray.data) {
    dst = luma601(src[0], src[1], src[2]);
    src += 3;
  }
  return gray;
}

PixelRect clip_rect(const PixelRect& rect, const GrayFrame& frame) {
  if (rect.width < 1 || rect.height < 1) {
    throw std::invalid_argument("rect dimensions must be positive");
  }
  const PixelRect clipped = intersect(rect, frame.bounds());
  if (clipped.width <= 0 || clipped.height <= 0) {
    throw OutsideFrameError("region lies entirely outside the frame");
  }
  return clipped;
}

std::int64_t region_sum(const GrayFrame& frame, const PixelRect& rect) {
  std::int64_t sum = 0;
  for (int y = rect.top; y < rect.bottom(); ++y) {
    const std::uint8_t* row = frame.data.data() + static_cast<std::size_t>(y) * frame.width;
    for (int x = rect.left; x < rect.right(); ++x) sum += row[x];
  }
  return sum;
}

double region_mean(const GrayFrame& frame, const PixelRect& rect) {
  if (rect.width < 1 || rect.height < 1) {
    throw std::invalid_argument("region_mean requires a non-empty rect");
  }
  if (!contains(frame.bounds(), rect)) {
    throw std::invalid_argument("region_mean requires a clipped rect");
  }
  return static_cast<double>(region_sum(frame, rect)) / static_cast<double>(rect.area());
}

RgbFrame gray_to_rgb(const GrayFrame& gray) {
  RgbFrame rgb;
  rgb.width = gray.width;
  rgb.height = gray.height;
  rgb.data.resize(gray.data.size() * 3);
  std::uint8_t* dst = rgb.data.data();
  for (std::uint8_t v : gray.data) {
    dst[0] = dst[1] = dst[2] = v;
    dst += 3;
  }
  return rgb;
}

namespace {

void set_pixel(RgbFrame& frame, int x, int y, std::array<std::uint8_t, 3> rgb) {
  if (x < 0 || y < 0 || x >= frame.width || y >= frame.height) return;
  std::uint8_t* px = frame.pixel(x, y);
  px[0] = rgb[0];
  px[1] = rgb[1];
  px[2] = rgb[2];
}

void draw_line(RgbFrame& frame, int x0, int y0, int x1, int y1, std::array<std::uint8_t, 3> rgb) {
  const int dx = std::abs(x1 - x0);
  const int dy = -std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1;
  const int sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    set_pixel(frame, x0, y0, rgb);
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

}  // namespace

void draw_rect_outline(RgbFrame& frame, const PixelRect& rect, std::array<std::uint8_t, 3> rgb) {
  if (rect.width < 1 || rect.height < 1) return;
  const int r = rect.right() - 1;
  const int b = rect.bottom() - 1;
  for (int x = rect.left; x <= r; ++x) {
    set_pixel(frame, x, rect.top, rgb);
    set_pixel(frame, x, b, rgb);
  }
  for (int y = rect.top; y <= b; ++y) {
    set_pixel(frame, rect.left, y, rgb);
    set_pixel(frame, r, y, rgb);
  }
}

void draw_polygon_outline(RgbFrame& frame, const std::vector<std::pair<double, double>>& vertices,
                          std::array<std::uint8_t, 3> rgb) {
  if (vertices.size() < 2) return;
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const auto& a = vertices[i];
    const auto& b = vertices[(i + 1) % vertices.size()];
    draw_line(frame, round_half_up(a.first), round_half_up(a.second), round_half_up(b.first),
              round_half_up(b.second), rgb);
  }
}

}  // namespace picbox
