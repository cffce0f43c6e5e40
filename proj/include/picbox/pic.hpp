#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "picbox/imaging.hpp"

namespace picbox {

// Patch Intensity Convergence parameters. Defaults follow the reference
// setting: 8x8 seed patch, 5 px expansion step, convergence threshold 4.
struct PicConfig {
  int w0 = 8;
  int h0 = 8;
  int delta = 5;
  double epsilon = 4.0;
  int max_iters = 64;
  // When true the box accepted at convergence is the last expanded box
  // instead of the one before the final (uninformative) expansion.
  bool return_expanded = false;

  void validate() const;
};

// Identity of the sequence a trajectory belongs to (see dataset.hpp for the
// valid grid of combinations).
struct SequenceKey {
  int dataset_id = 0;
  int camera_id = 0;

  bool operator==(const SequenceKey&) const = default;
  auto operator<=>(const SequenceKey&) const = default;
  std::string str() const;  // "d1/c0"
};

// A per-frame 2D point. Coordinates may be fractional; they are honored in
// center arithmetic and rounded half-up only when boxes are rasterized.
struct TrajectoryPoint {
  double x = 0.0;
  double y = 0.0;
  std::int64_t frame_index = 0;
  SequenceKey sequence;
};

enum class HaltStatus { converged, max_iters_reached, frame_saturated };
const char* to_string(HaltStatus status);

// Audit trail of one pic_box run: the evaluated (clipped) boxes and their
// means, in expansion order, plus why the loop stopped.
struct IntensityTrace {
  std::vector<double> means;
  std::vector<PixelRect> boxes;
  HaltStatus halt = HaltStatus::converged;
};

struct PicResult {
  BBox box;
  IntensityTrace trace;
};

// Decides |sum2/area2 - sum1/area1| < epsilon without forming the quotients,
// so the halting comparison is exact for integer sums and areas.
bool mean_delta_below(std::int64_t sum1, std::int64_t area1, std::int64_t sum2,
                      std::int64_t area2, double epsilon);

// Seed box of w0 x h0 centered on the point, not yet clipped.
PixelRect init_box(const TrajectoryPoint& point, const PicConfig& config);

// One center-preserving expansion of an arbitrary rect: both sides grow by
// delta, the new corner is re-rasterized from the rect's own real center.
PixelRect expand(const PixelRect& rect, const PicConfig& config);

// Runs the expansion loop: grow, clip, take the region mean, stop once the
// mean moves by less than epsilon (or the frame is exhausted). The halting
// comparison is done in exact integer arithmetic, so results are identical
// across runs and platforms.
PicResult pic_box(const GrayFrame& frame, const TrajectoryPoint& point, const PicConfig& config);

struct PicBatchItem {
  const GrayFrame* frame = nullptr;
  TrajectoryPoint point;
};

struct PicBatchResult {
  bool ok = false;
  std::string error;
  PicResult result;
};

// Order-preserving batch runner; `jobs` <= 0 means one worker per core.
// Per-item failures are reported in place without aborting the batch.
std::vector<PicBatchResult> pic_batch(const std::vector<PicBatchItem>& items,
                                      const PicConfig& config, int jobs = 0);

}  // namespace picbox
