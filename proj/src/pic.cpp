#include "picbox/pic.hpp"

#include <atomic>
#include <stdexcept>
#include <thread>

namespace picbox {

void PicConfig::validate() const {
  if (w0 < 1 || h0 < 1) throw std::invalid_argument("initial patch size must be >= 1");
  if (delta < 1) throw std::invalid_argument("expansion step must be >= 1");
  if (!(epsilon > 0.0)) throw std::invalid_argument("convergence threshold must be > 0");
  if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
}

std::string SequenceKey::str() const {
  return "d" + std::to_string(dataset_id) + "/c" + std::to_string(camera_id);
}

const char* to_string(HaltStatus status) {
  switch (status) {
    case HaltStatus::converged: return "converged";
    case HaltStatus::max_iters_reached: return "max_iters_reached";
    case HaltStatus::frame_saturated: return "frame_saturated";
  }
  return "unknown";
}

bool mean_delta_below(std::int64_t sum1, std::int64_t area1, std::int64_t sum2,
                      std::int64_t area2, double epsilon) {
  const __int128 lhs128 = static_cast<__int128>(sum2) * area1 - static_cast<__int128>(sum1) * area2;
  const __int128 abs128 = lhs128 < 0 ? -lhs128 : lhs128;
  const long double rhs =
      static_cast<long double>(epsilon) * static_cast<long double>(area1) * area2;
  return static_cast<long double>(abs128) < rhs;
}

namespace {

// B_t rasterized directly from the point, so fractional coordinates never
// accumulate rounding drift across steps.
PixelRect box_at_step(const TrajectoryPoint& point, const PicConfig& config, int step) {
  const int w = config.w0 + step * config.delta;
  const int h = config.h0 + step * config.delta;
  return PixelRect{round_half_up(point.x - w / 2.0), round_half_up(point.y - h / 2.0), w, h};
}

}  // namespace

PixelRect init_box(const TrajectoryPoint& point, const PicConfig& config) {
  config.validate();
  return box_at_step(point, config, 0);
}

PixelRect expand(const PixelRect& rect, const PicConfig& config) {
  config.validate();
  const double cx = rect.left + rect.width / 2.0;
  const double cy = rect.top + rect.height / 2.0;
  const int w = rect.width + config.delta;
  const int h = rect.height + config.delta;
  return PixelRect{round_half_up(cx - w / 2.0), round_half_up(cy - h / 2.0), w, h};
}

PicResult pic_box(const GrayFrame& frame, const TrajectoryPoint& point, const PicConfig& config) {
  config.validate();

  PixelRect current = clip_rect(box_at_step(point, config, 0), frame);
  std::int64_t sum = region_sum(frame, current);
  std::int64_t area = current.area();

  PicResult out;
  out.box.source = BoxSource::pic;
  out.trace.boxes.push_back(current);
  out.trace.means.push_back(static_cast<double>(sum) / static_cast<double>(area));

  const PixelRect full = frame.bounds();
  for (int step = 1; step <= config.max_iters; ++step) {
    const PixelRect next = intersect(box_at_step(point, config, step), full);
    if (next == current && next == full) {
      out.trace.halt = HaltStatus::frame_saturated;
      out.box.rect = current;
      return out;
    }
    const std::int64_t next_sum = region_sum(frame, next);
    const std::int64_t next_area = next.area();
    out.trace.boxes.push_back(next);
    out.trace.means.push_back(static_cast<double>(next_sum) / static_cast<double>(next_area));
    if (mean_delta_below(sum, area, next_sum, next_area, config.epsilon)) {
      out.trace.halt = HaltStatus::converged;
      out.box.rect = config.return_expanded ? next : current;
      return out;
    }
    current = next;
    sum = next_sum;
    area = next_area;
  }
  out.trace.halt = HaltStatus::max_iters_reached;
  out.box.rect = current;
  return out;
}

std::vector<PicBatchResult> pic_batch(const std::vector<PicBatchItem>& items,
                                      const PicConfig& config, int jobs) {
  config.validate();
  std::vector<PicBatchResult> results(items.size());
  if (items.empty()) return results;

  std::size_t workers = jobs > 0 ? static_cast<std::size_t>(jobs)
                                 : std::thread::hardware_concurrency();
  if (workers == 0) workers = 1;
  workers = std::min(workers, items.size());

  std::atomic<std::size_t> cursor{0};
  auto run = [&] {
    for (std::size_t i = cursor.fetch_add(1); i < items.size(); i = cursor.fetch_add(1)) {
      PicBatchResult& slot = results[i];
      const PicBatchItem& item = items[i];
      try {
        if (item.frame == nullptr) throw std::invalid_argument("batch item has no frame");
        slot.result = pic_box(*item.frame, item.point, config);
        slot.ok = true;
      } catch (const std::exception& e) {
        slot.ok = false;
        slot.error = e.what();
      }
    }
  };

  if (workers == 1) {
    run();
    return results;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(run);
  for (std::thread& t : pool) t.join();
  return results;
}

}  // namespace picbox
