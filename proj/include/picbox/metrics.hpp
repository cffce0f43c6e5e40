#pragma once

#include <functional>
#include <string>
#include <vector>

#include "picbox/pic.hpp"

namespace picbox {

// Intersection over union on integer pixel areas of half-open rects.
// Both boxes must have positive area; disjoint boxes score 0.
double iou(const PixelRect& a, const PixelRect& b);
inline double iou(const BBox& a, const BBox& b) { return iou(a.rect, b.rect); }

struct EvalRecord {
  std::string item_id;
  std::string method;
  BBox predicted;
  BBox truth;
  double iou = 0.0;
  double elapsed = 0.0;  // seconds, extractor call only (image already decoded)
  bool failed = false;
};

struct MethodSummary {
  std::string method;
  double mean_iou = 0.0;
  double mean_elapsed = 0.0;
  std::size_t n = 0;
};

struct EvalItem {
  std::string id;
  const GrayFrame* frame = nullptr;
  TrajectoryPoint point;
  BBox truth;
};

using Extractor = std::function<BBox(const GrayFrame&, const TrajectoryPoint&)>;

struct NamedExtractor {
  std::string name;
  Extractor fn;
};

struct EvalOutcome {
  std::vector<EvalRecord> records;
  std::vector<MethodSummary> summaries;
};

// Runs every method on every item. Extractor failures score iou 0 with the
// failure flag set; they never abort the run. Timed calls execute serially.
EvalOutcome evaluate(const std::vector<EvalItem>& items,
                     const std::vector<NamedExtractor>& methods);

// Median wall time per call over `repeats` runs of the extractor on one item.
double time_extractor(const Extractor& extractor, const GrayFrame& frame,
                      const TrajectoryPoint& point, int repeats);

std::string format_summary_table(const std::vector<MethodSummary>& summaries);
std::string summaries_to_json(const std::vector<MethodSummary>& summaries);
std::string records_to_json(const std::vector<EvalRecord>& records);

}  // namespace picbox
