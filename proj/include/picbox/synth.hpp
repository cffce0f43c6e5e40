#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "picbox/pic.hpp"

namespace picbox {

enum class TargetShape { rect, ellipse };

// Synthetic scene description with known ground truth.
struct SceneSpec {
  struct Target {
    TargetShape shape = TargetShape::rect;
    double cx = 0.0;
    double cy = 0.0;
    int width = 1;
    int height = 1;
    int intensity = 0;
  };
  struct Noise {
    double sigma = 0.0;
    std::uint64_t seed = 0;
  };

  int width = 0;
  int height = 0;
  int background = 0;
  std::vector<Target> targets;  // drawn in order; later targets paint over earlier
  std::optional<Noise> noise;

  void validate() const;
};

struct RenderResult {
  GrayFrame frame;
  std::vector<BBox> truth;  // exact rasterized extent of each target, in order
};

// Deterministic rasterization; with noise the same seed reproduces the same
// frame byte for byte.
RenderResult render(const SceneSpec& spec);

// Closed-form intensity trace for a noise-free single-rect scene. Box
// geometry is rasterized from the point and the means come from exact
// rectangle-intersection areas; no pixel of the rendered frame is read, so
// this is an independent oracle for pic_box.
IntensityTrace oracle_trace(const SceneSpec& spec, const TrajectoryPoint& point,
                            const PicConfig& config);

// Scene specs as JSON documents (single object or array of objects).
SceneSpec scene_from_json(const std::string& json_text);
std::vector<SceneSpec> scenes_from_json(const std::string& json_text);
std::string scene_to_json(const SceneSpec& spec);

}  // namespace picbox
