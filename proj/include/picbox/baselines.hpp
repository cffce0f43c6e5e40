#pragma once

#include "picbox/pic.hpp"

namespace picbox {

struct FixedConfig {
  int width = 50;
  int height = 50;

  void validate() const;
};

enum class Polarity { foreground_below, foreground_above };
const char* to_string(Polarity polarity);
Polarity polarity_from_string(const std::string& name);

struct ThresholdConfig {
  int threshold = 150;
  Polarity polarity = Polarity::foreground_below;
  int connectivity = 8;  // 4 or 8
  int search_radius = 50;
  int fallback_size = 50;

  void validate() const;
};

// Box of the configured size centered at the point, clipped to the frame.
BBox fixed_box(const TrajectoryPoint& point, const GrayFrame& frame, const FixedConfig& config);

struct ThresholdOutcome {
  BBox box;
  bool fallback = false;  // no component qualified; fixed fallback box returned
};

// Binarizes against the threshold, picks the connected component containing
// the point (or the one nearest to it within search_radius) and returns its
// tight bounding box. Falls back to a centered fixed box when no foreground
// qualifies.
ThresholdOutcome threshold_box(const GrayFrame& frame, const TrajectoryPoint& point,
                               const ThresholdConfig& config);

}  // namespace picbox
