#include "picbox/baselines.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace picbox {

void FixedConfig::validate() const {
  if (width < 1 || height < 1) throw std::invalid_argument("fixed box size must be >= 1");
}

const char* to_string(Polarity polarity) {
  return polarity == Polarity::foreground_below ? "foreground_below" : "foreground_above";
}

Polarity polarity_from_string(const std::string& name) {
  if (name == "foreground_below" || name == "below") return Polarity::foreground_below;
  if (name == "foreground_above" || name == "above") return Polarity::foreground_above;
  throw std::invalid_argument("unknown polarity: " + name);
}

void ThresholdConfig::validate() const {
  if (threshold < 0 || threshold > 255) throw std::invalid_argument("threshold must be in [0,255]");
  if (connectivity != 4 && connectivity != 8) {
    throw std::invalid_argument("connectivity must be 4 or 8");
  }
  if (search_radius < 1) throw std::invalid_argument("search_radius must be >= 1");
  if (fallback_size < 1) throw std::invalid_argument("fallback_size must be >= 1");
}

namespace {

void require_inside(const GrayFrame& frame, const TrajectoryPoint& point) {
  if (!frame.contains_point(point.x, point.y)) {
    throw OutsideFrameError("trajectory point lies outside the frame");
  }
}

PixelRect centered_box(const TrajectoryPoint& point, int width, int height) {
  return PixelRect{round_half_up(point.x - width / 2.0), round_half_up(point.y - height / 2.0),
                   width, height};
}

}  // namespace

BBox fixed_box(const TrajectoryPoint& point, const GrayFrame& frame, const FixedConfig& config) {
  config.validate();
  require_inside(frame, point);
  return BBox{clip_rect(centered_box(point, config.width, config.height), frame),
              BoxSource::fixed};
}

ThresholdOutcome threshold_box(const GrayFrame& frame, const TrajectoryPoint& point,
                               const ThresholdConfig& config) {
  config.validate();
  require_inside(frame, point);

  const auto foreground = [&](int x, int y) {
    const int v = frame.at(x, y);
    return config.polarity == Polarity::foreground_below ? v < config.threshold
                                                         : v > config.threshold;
  };

  const int px = static_cast<int>(std::floor(point.x));
  const int py = static_cast<int>(std::floor(point.y));

  // Seed: the pixel under the point if foreground, else the nearest
  // foreground pixel within the search radius (squared Euclidean distance,
  // scan order breaking ties).
  int seed_x = -1;
  int seed_y = -1;
  if (foreground(px, py)) {
    seed_x = px;
    seed_y = py;
  } else {
    const int r = config.search_radius;
    const std::int64_t limit = static_cast<std::int64_t>(r) * r;
    std::int64_t best = limit + 1;
    const int y0 = std::max(0, py - r);
    const int y1 = std::min(frame.height - 1, py + r);
    const int x0 = std::max(0, px - r);
    const int x1 = std::min(frame.width - 1, px + r);
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        if (!foreground(x, y)) continue;
        const std::int64_t dx = x - px;
        const std::int64_t dy = y - py;
        const std::int64_t d2 = dx * dx + dy * dy;
        if (d2 <= limit && d2 < best) {
          best = d2;
          seed_x = x;
          seed_y = y;
        }
      }
    }
  }

  if (seed_x < 0) {
    FixedConfig fallback{config.fallback_size, config.fallback_size};
    BBox box = fixed_box(point, frame, fallback);
    box.source = BoxSource::threshold;
    return ThresholdOutcome{box, true};
  }

  // Flood fill the seed's component, tracking its extent.
  std::vector<std::uint8_t> visited(static_cast<std::size_t>(frame.width) * frame.height, 0);
  std::vector<std::pair<int, int>> stack{{seed_x, seed_y}};
  visited[static_cast<std::size_t>(seed_y) * frame.width + seed_x] = 1;
  int min_x = seed_x, max_x = seed_x, min_y = seed_y, max_y = seed_y;
  while (!stack.empty()) {
    const auto [cx, cy] = stack.back();
    stack.pop_back();
    min_x = std::min(min_x, cx);
    max_x = std::max(max_x, cx);
    min_y = std::min(min_y, cy);
    max_y = std::max(max_y, cy);
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        if (config.connectivity == 4 && dx != 0 && dy != 0) continue;
        const int nx = cx + dx;
        const int ny = cy + dy;
        if (nx < 0 || ny < 0 || nx >= frame.width || ny >= frame.height) continue;
        std::uint8_t& seen = visited[static_cast<std::size_t>(ny) * frame.width + nx];
        if (seen || !foreground(nx, ny)) continue;
        seen = 1;
        stack.emplace_back(nx, ny);
      }
    }
  }

  const PixelRect tight{min_x, min_y, max_x - min_x + 1, max_y - min_y + 1};
  return ThresholdOutcome{BBox{tight, BoxSource::threshold}, false};
}

}  // namespace picbox
