#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace picbox {

// Pixel convention: x grows rightward (column), y downward (row), origin at
// the top-left corner. A real coordinate x lies inside pixel floor(x).
inline int round_half_up(double v) { return static_cast<int>(std::floor(v + 0.5)); }

// Axis-aligned half-open rectangle [left, left+width) x [top, top+height).
// left/top may be negative before clipping.
struct PixelRect {
  int left = 0;
  int top = 0;
  int width = 0;
  int height = 0;

  int right() const { return left + width; }
  int bottom() const { return top + height; }
  std::int64_t area() const { return static_cast<std::int64_t>(width) * height; }

  bool operator==(const PixelRect&) const = default;
};

// Intersection of two rects; width/height <= 0 encodes an empty result.
inline PixelRect intersect(const PixelRect& a, const PixelRect& b) {
  const int l = std::max(a.left, b.left);
  const int t = std::max(a.top, b.top);
  const int r = std::min(a.right(), b.right());
  const int bo = std::min(a.bottom(), b.bottom());
  return PixelRect{l, t, r - l, bo - t};
}

inline bool contains(const PixelRect& outer, const PixelRect& inner) {
  return outer.left <= inner.left && outer.top <= inner.top &&
         outer.right() >= inner.right() && outer.bottom() >= inner.bottom();
}

inline bool contains(const PixelRect& rect, int x, int y) {
  return x >= rect.left && x < rect.right() && y >= rect.top && y < rect.bottom();
}

enum class BoxSource { pic, fixed, threshold, human, segmenter };

const char* to_string(BoxSource source);
BoxSource box_source_from_string(const std::string& name);

struct BBox {
  PixelRect rect;
  BoxSource source = BoxSource::human;
};

// Thrown when a point (or the region seeded from it) has no overlap with the
// frame it is evaluated against.
struct OutsideFrameError : std::runtime_error {
  explicit OutsideFrameError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace picbox
