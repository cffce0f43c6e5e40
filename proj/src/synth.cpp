#include "picbox/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace picbox {

namespace {

PixelRect raster_extent(const SceneSpec::Target& target) {
  return PixelRect{round_half_up(target.cx - target.width / 2.0),
                   round_half_up(target.cy - target.height / 2.0), target.width, target.height};
}

void check_intensity(int value, const char* what) {
  if (value < 0 || value > 255) {
    throw std::invalid_argument(std::string(what) + " must be in [0,255]");
  }
}

}  // namespace

void SceneSpec::validate() const {
  if (width < 1 || height < 1) throw std::invalid_argument("scene dimensions must be positive");
  check_intensity(background, "background intensity");
  const PixelRect frame{0, 0, width, height};
  for (const Target& target : targets) {
    if (target.width < 1 || target.height < 1) {
      throw std::invalid_argument("target size must be >= 1");
    }
    check_intensity(target.intensity, "target intensity");
    if (!contains(frame, raster_extent(target))) {
      throw std::invalid_argument("target extends beyond the frame");
    }
  }
  if (noise && noise->sigma < 0.0) throw std::invalid_argument("noise sigma must be >= 0");
}

RenderResult render(const SceneSpec& spec) {
  spec.validate();
  RenderResult out;
  out.frame = GrayFrame(spec.width, spec.height, static_cast<std::uint8_t>(spec.background));

  for (const SceneSpec::Target& target : spec.targets) {
    const PixelRect extent = raster_extent(target);
    const auto value = static_cast<std::uint8_t>(target.intensity);
    if (target.shape == TargetShape::rect) {
      for (int y = extent.top; y < extent.bottom(); ++y) {
        for (int x = extent.left; x < extent.right(); ++x) out.frame.at(x, y) = value;
      }
      out.truth.push_back(BBox{extent, BoxSource::human});
    } else {
      // Pixel centers inside the ellipse; the reported truth box is the tight
      // extent of the painted pixels.
      const double a = target.width / 2.0;
      const double b = target.height / 2.0;
      int min_x = spec.width, min_y = spec.height, max_x = -1, max_y = -1;
      for (int y = extent.top; y < extent.bottom(); ++y) {
        for (int x = extent.left; x < extent.right(); ++x) {
          const double dx = (x + 0.5 - target.cx) / a;
          const double dy = (y + 0.5 - target.cy) / b;
          if (dx * dx + dy * dy > 1.0) continue;
          out.frame.at(x, y) = value;
          min_x = std::min(min_x, x);
          max_x = std::max(max_x, x);
          min_y = std::min(min_y, y);
          max_y = std::max(max_y, y);
        }
      }
      if (max_x < 0) {
        // Degenerate axes can miss every pixel center; paint the center pixel.
        const int cx = std::clamp(static_cast<int>(std::floor(target.cx)), 0, spec.width - 1);
        const int cy = std::clamp(static_cast<int>(std::floor(target.cy)), 0, spec.height - 1);
        out.frame.at(cx, cy) = value;
        min_x = max_x = cx;
        min_y = max_y = cy;
      }
      out.truth.push_back(
          BBox{PixelRect{min_x, min_y, max_x - min_x + 1, max_y - min_y + 1}, BoxSource::human});
    }
  }

  if (spec.noise && spec.noise->sigma > 0.0) {
    std::mt19937_64 rng(spec.noise->seed);
    std::normal_distribution<double> gaussian(0.0, spec.noise->sigma);
    for (std::uint8_t& px : out.frame.data) {
      const double noisy = px + gaussian(rng);
      px = static_cast<std::uint8_t>(std::clamp(static_cast<int>(std::lround(noisy)), 0, 255));
    }
  }
  return out;
}

IntensityTrace oracle_trace(const SceneSpec& spec, const TrajectoryPoint& point,
                            const PicConfig& config) {
  spec.validate();
  config.validate();
  if (spec.noise && spec.noise->sigma > 0.0) {
    throw std::invalid_argument("oracle requires a noise-free scene");
  }
  if (spec.targets.size() != 1 || spec.targets[0].shape != TargetShape::rect) {
    throw std::invalid_argument("oracle requires exactly one rectangular target");
  }

  const PixelRect full{0, 0, spec.width, spec.height};
  const PixelRect target = raster_extent(spec.targets[0]);
  const std::int64_t bg = spec.background;
  const std::int64_t fg = spec.targets[0].intensity;

  // Means come from exact rectangle-intersection areas, never pixel scans:
  // sum(B) = bg * |B| - (bg - fg) * |B and target|.
  const auto box_at_step = [&](int step) {
    const int w = config.w0 + step * config.delta;
    const int h = config.h0 + step * config.delta;
    return PixelRect{round_half_up(point.x - w / 2.0), round_half_up(point.y - h / 2.0), w, h};
  };
  const auto stats = [&](const PixelRect& box) {
    const PixelRect overlap = intersect(box, target);
    const std::int64_t covered =
        overlap.width > 0 && overlap.height > 0 ? overlap.area() : 0;
    return bg * box.area() - (bg - fg) * covered;
  };

  PixelRect current = intersect(box_at_step(0), full);
  if (current.width <= 0 || current.height <= 0) {
    throw OutsideFrameError("region lies entirely outside the frame");
  }
  std::int64_t sum = stats(current);
  std::int64_t area = current.area();

  IntensityTrace trace;
  trace.boxes.push_back(current);
  trace.means.push_back(static_cast<double>(sum) / static_cast<double>(area));

  for (int step = 1; step <= config.max_iters; ++step) {
    const PixelRect next = intersect(box_at_step(step), full);
    if (next == current && next == full) {
      trace.halt = HaltStatus::frame_saturated;
      return trace;
    }
    const std::int64_t next_sum = stats(next);
    const std::int64_t next_area = next.area();
    trace.boxes.push_back(next);
    trace.means.push_back(static_cast<double>(next_sum) / static_cast<double>(next_area));
    if (mean_delta_below(sum, area, next_sum, next_area, config.epsilon)) {
      trace.halt = HaltStatus::converged;
      return trace;
    }
    current = next;
    sum = next_sum;
    area = next_area;
  }
  trace.halt = HaltStatus::max_iters_reached;
  return trace;
}

namespace {

SceneSpec scene_from_value(const nlohmann::json& doc) {
  SceneSpec spec;
  spec.width = doc.at("width").get<int>();
  spec.height = doc.at("height").get<int>();
  spec.background = doc.at("background").get<int>();
  if (doc.contains("targets")) {
    for (const auto& item : doc.at("targets")) {
      SceneSpec::Target target;
      const std::string shape = item.value("shape", "rect");
      if (shape == "rect") {
        target.shape = TargetShape::rect;
      } else if (shape == "ellipse") {
        target.shape = TargetShape::ellipse;
      } else {
        throw std::invalid_argument("unknown target shape: " + shape);
      }
      target.cx = item.at("cx").get<double>();
      target.cy = item.at("cy").get<double>();
      target.width = item.at("width").get<int>();
      target.height = item.at("height").get<int>();
      target.intensity = item.at("intensity").get<int>();
      spec.targets.push_back(target);
    }
  }
  if (doc.contains("noise") && !doc.at("noise").is_null()) {
    SceneSpec::Noise noise;
    noise.sigma = doc.at("noise").at("sigma").get<double>();
    noise.seed = doc.at("noise").value("seed", 0);
    spec.noise = noise;
  }
  spec.validate();
  return spec;
}

}  // namespace

SceneSpec scene_from_json(const std::string& json_text) {
  return scene_from_value(nlohmann::json::parse(json_text));
}

std::vector<SceneSpec> scenes_from_json(const std::string& json_text) {
  const nlohmann::json doc = nlohmann::json::parse(json_text);
  std::vector<SceneSpec> scenes;
  if (doc.is_array()) {
    for (const auto& item : doc) scenes.push_back(scene_from_value(item));
  } else {
    scenes.push_back(scene_from_value(doc));
  }
  return scenes;
}

std::string scene_to_json(const SceneSpec& spec) {
  nlohmann::ordered_json doc;
  doc["width"] = spec.width;
  doc["height"] = spec.height;
  doc["background"] = spec.background;
  doc["targets"] = nlohmann::ordered_json::array();
  for (const SceneSpec::Target& target : spec.targets) {
    doc["targets"].push_back({{"shape", target.shape == TargetShape::rect ? "rect" : "ellipse"},
                              {"cx", target.cx},
                              {"cy", target.cy},
                              {"width", target.width},
                              {"height", target.height},
                              {"intensity", target.intensity}});
  }
  if (spec.noise) {
    doc["noise"] = {{"sigma", spec.noise->sigma}, {"seed", spec.noise->seed}};
  }
  return doc.dump(2) + "\n";
}

}  // namespace picbox
