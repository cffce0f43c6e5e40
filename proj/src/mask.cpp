#include <algorithm>
#include <map>
#include <stdexcept>
#include <vector>

#include "picbox/segmenter.hpp"

namespace picbox {

BinaryMask::BinaryMask(int w, int h, std::uint8_t fill) : width(w), height(h) {
  if (w < 1 || h < 1) throw std::invalid_argument("mask dimensions must be positive");
  data.assign(static_cast<std::size_t>(w) * h, fill);
}

void MaskRLE::validate() const {
  if (width < 1 || height < 1) throw std::invalid_argument("mask dimensions must be positive");
  std::int64_t total = 0;
  for (const std::int64_t count : counts) {
    if (count < 0) throw std::invalid_argument("run lengths must be nonnegative");
    total += count;
  }
  if (total != static_cast<std::int64_t>(width) * height) {
    throw std::invalid_argument("run lengths must sum to width*height");
  }
}

bool MaskRLE::empty_foreground() const { return foreground_area() == 0; }

std::int64_t MaskRLE::foreground_area() const {
  std::int64_t area = 0;
  for (std::size_t i = 1; i < counts.size(); i += 2) area += counts[i];
  return area;
}

MaskRLE rle_encode(const BinaryMask& mask) {
  if (mask.width < 1 || mask.height < 1) {
    throw std::invalid_argument("mask dimensions must be positive");
  }
  MaskRLE rle;
  rle.width = mask.width;
  rle.height = mask.height;
  bool current = false;  // runs start with background
  std::int64_t run = 0;
  for (int x = 0; x < mask.width; ++x) {
    for (int y = 0; y < mask.height; ++y) {
      const bool value = mask.at(x, y) != 0;
      if (value == current) {
        ++run;
      } else {
        rle.counts.push_back(run);
        current = value;
        run = 1;
      }
    }
  }
  rle.counts.push_back(run);
  return rle;
}

BinaryMask rle_decode(const MaskRLE& rle) {
  rle.validate();
  BinaryMask mask(rle.width, rle.height, 0);
  std::int64_t index = 0;
  bool current = false;
  for (const std::int64_t count : rle.counts) {
    if (current) {
      for (std::int64_t k = 0; k < count; ++k) {
        const std::int64_t pos = index + k;
        mask.at(static_cast<int>(pos / rle.height), static_cast<int>(pos % rle.height)) = 1;
      }
    }
    index += count;
    current = !current;
  }
  return mask;
}

BBox bbox_from_mask(const MaskRLE& rle) {
  rle.validate();
  int min_x = rle.width, min_y = rle.height, max_x = -1, max_y = -1;
  std::int64_t index = 0;
  bool current = false;
  for (const std::int64_t count : rle.counts) {
    if (current && count > 0) {
      // A run spans [index, index+count) in column-major order.
      for (std::int64_t pos = index; pos < index + count;) {
        const int x = static_cast<int>(pos / rle.height);
        const int y0 = static_cast<int>(pos % rle.height);
        const std::int64_t span = std::min<std::int64_t>(rle.height - y0, index + count - pos);
        min_x = std::min(min_x, x);
        max_x = std::max(max_x, x);
        min_y = std::min(min_y, y0);
        max_y = std::max(max_y, static_cast<int>(y0 + span - 1));
        pos += span;
      }
    }
    index += count;
    current = !current;
  }
  if (max_x < 0) throw std::invalid_argument("mask has no foreground");
  return BBox{PixelRect{min_x, min_y, max_x - min_x + 1, max_y - min_y + 1},
              BoxSource::segmenter};
}

namespace {

struct Vertex {
  int x = 0;
  int y = 0;
  bool operator<(const Vertex& other) const {
    return y != other.y ? y < other.y : x < other.x;
  }
  bool operator==(const Vertex&) const = default;
};

// Largest 8-connected foreground component, by pixel count; ties go to the
// component met first in row-major scan order.
std::vector<std::uint8_t> largest_component(const BinaryMask& mask) {
  const int w = mask.width;
  const int h = mask.height;
  std::vector<std::uint8_t> selected(static_cast<std::size_t>(w) * h, 0);
  std::vector<std::uint8_t> visited(static_cast<std::size_t>(w) * h, 0);
  std::vector<std::pair<int, int>> best;
  std::vector<std::pair<int, int>> stack;
  for (int sy = 0; sy < h; ++sy) {
    for (int sx = 0; sx < w; ++sx) {
      const std::size_t start = static_cast<std::size_t>(sy) * w + sx;
      if (visited[start] || mask.data[start] == 0) continue;
      std::vector<std::pair<int, int>> component;
      stack.assign(1, {sx, sy});
      visited[start] = 1;
      while (!stack.empty()) {
        const auto [cx, cy] = stack.back();
        stack.pop_back();
        component.emplace_back(cx, cy);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            const int nx = cx + dx;
            const int ny = cy + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            const std::size_t pos = static_cast<std::size_t>(ny) * w + nx;
            if (visited[pos] || mask.data[pos] == 0) continue;
            visited[pos] = 1;
            stack.emplace_back(nx, ny);
          }
        }
      }
      if (component.size() > best.size()) best = std::move(component);
    }
  }
  for (const auto& [x, y] : best) selected[static_cast<std::size_t>(y) * w + x] = 1;
  return selected;
}

}  // namespace

std::vector<std::pair<double, double>> mask_to_polygon(const BinaryMask& mask) {
  if (mask.width < 1 || mask.height < 1) {
    throw std::invalid_argument("mask dimensions must be positive");
  }
  const std::vector<std::uint8_t> region = largest_component(mask);
  const int w = mask.width;
  const int h = mask.height;
  const auto inside = [&](int x, int y) {
    return x >= 0 && y >= 0 && x < w && y < h &&
           region[static_cast<std::size_t>(y) * w + x] != 0;
  };

  // Directed boundary edges on the pixel-corner grid, clockwise around each
  // pixel in screen coordinates, so the region stays on one consistent side.
  std::map<Vertex, std::vector<std::pair<Vertex, bool>>> edges;  // start -> (end, used)
  Vertex start{-1, -1};
  bool have_start = false;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!inside(x, y)) continue;
      const auto add = [&](int ax, int ay, int bx, int by) {
        edges[Vertex{ax, ay}].push_back({Vertex{bx, by}, false});
      };
      if (!inside(x, y - 1)) {
        add(x, y, x + 1, y);
        if (!have_start) {
          start = Vertex{x, y};
          have_start = true;
        }
      }
      if (!inside(x + 1, y)) add(x + 1, y, x + 1, y + 1);
      if (!inside(x, y + 1)) add(x + 1, y + 1, x, y + 1);
      if (!inside(x - 1, y)) add(x, y + 1, x, y);
    }
  }
  if (!have_start) return {};

  // Walk the outer contour. At corners shared by two diagonal pixels, prefer
  // the sharpest left turn: that keeps 8-connected regions in one loop.
  std::vector<std::pair<double, double>> polygon;
  Vertex current = start;
  int dir_x = 1, dir_y = 0;  // the first edge of the start vertex runs right
  polygon.emplace_back(current.x, current.y);
  auto& first_edges = edges[start];
  for (auto& [end, used] : first_edges) {
    if (end == Vertex{start.x + 1, start.y}) {
      used = true;
      break;
    }
  }
  current = Vertex{start.x + 1, start.y};

  while (!(current == start)) {
    auto& outgoing = edges[current];
    const int preferred[3][2] = {
        {dir_y, -dir_x},  // left
        {dir_x, dir_y},   // straight
        {-dir_y, dir_x},  // right
    };
    bool moved = false;
    for (const auto& [dx, dy] : preferred) {
      const Vertex target{current.x + dx, current.y + dy};
      for (auto& [end, used] : outgoing) {
        if (used || !(end == target)) continue;
        used = true;
        if (dx != dir_x || dy != dir_y) polygon.emplace_back(current.x, current.y);
        dir_x = dx;
        dir_y = dy;
        current = target;
        moved = true;
        break;
      }
      if (moved) break;
    }
    if (!moved) throw std::logic_error("contour walk dead end");
  }
  return polygon;
}

}  // namespace picbox
