#include "picbox/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace picbox {

double iou(const PixelRect& a, const PixelRect& b) {
  if (a.area() <= 0 || b.area() <= 0) {
    throw std::invalid_argument("iou requires boxes with positive area");
  }
  const PixelRect overlap = intersect(a, b);
  if (overlap.width <= 0 || overlap.height <= 0) return 0.0;
  const std::int64_t inter = overlap.area();
  const std::int64_t uni = a.area() + b.area() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

EvalOutcome evaluate(const std::vector<EvalItem>& items,
                     const std::vector<NamedExtractor>& methods) {
  EvalOutcome out;
  out.records.reserve(items.size() * methods.size());
  for (const NamedExtractor& method : methods) {
    double iou_sum = 0.0;
    double time_sum = 0.0;
    for (const EvalItem& item : items) {
      EvalRecord record;
      record.item_id = item.id;
      record.method = method.name;
      record.truth = item.truth;
      const auto start = std::chrono::steady_clock::now();
      try {
        record.predicted = method.fn(*item.frame, item.point);
        record.elapsed = seconds_since(start);
        record.iou = iou(record.predicted, record.truth);
      } catch (const std::exception&) {
        record.elapsed = seconds_since(start);
        record.iou = 0.0;
        record.failed = true;
      }
      iou_sum += record.iou;
      time_sum += record.elapsed;
      out.records.push_back(std::move(record));
    }
    if (!items.empty()) {
      out.summaries.push_back(MethodSummary{method.name, iou_sum / items.size(),
                                            time_sum / items.size(), items.size()});
    }
  }
  return out;
}

double time_extractor(const Extractor& extractor, const GrayFrame& frame,
                      const TrajectoryPoint& point, int repeats) {
  if (repeats < 1) throw std::invalid_argument("repeats must be >= 1");
  std::vector<double> samples;
  samples.reserve(repeats);
  for (int i = 0; i < repeats; ++i) {
    const auto start = std::chrono::steady_clock::now();
    (void)extractor(frame, point);
    samples.push_back(seconds_since(start));
  }
  std::nth_element(samples.begin(), samples.begin() + repeats / 2, samples.end());
  return samples[repeats / 2];
}

std::string format_summary_table(const std::vector<MethodSummary>& summaries) {
  std::size_t name_width = 6;
  for (const MethodSummary& s : summaries) name_width = std::max(name_width, s.method.size());

  std::string out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-*s  %8s  %12s  %6s\n", static_cast<int>(name_width),
                "method", "mean_iou", "mean_time_s", "n");
  out += line;
  for (const MethodSummary& s : summaries) {
    std::snprintf(line, sizeof(line), "%-*s  %8.4f  %12.6f  %6zu\n", static_cast<int>(name_width),
                  s.method.c_str(), s.mean_iou, s.mean_elapsed, s.n);
    out += line;
  }
  return out;
}

std::string summaries_to_json(const std::vector<MethodSummary>& summaries) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const MethodSummary& s : summaries) {
    doc.push_back({{"method", s.method},
                   {"mean_iou", s.mean_iou},
                   {"mean_elapsed", s.mean_elapsed},
                   {"n", s.n}});
  }
  return doc.dump(2) + "\n";
}

std::string records_to_json(const std::vector<EvalRecord>& records) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const EvalRecord& r : records) {
    doc.push_back({{"item", r.item_id},
                   {"method", r.method},
                   {"predicted", {r.predicted.rect.left, r.predicted.rect.top,
                                  r.predicted.rect.width, r.predicted.rect.height}},
                   {"truth", {r.truth.rect.left, r.truth.rect.top, r.truth.rect.width,
                              r.truth.rect.height}},
                   {"iou", r.iou},
                   {"elapsed", r.elapsed},
                   {"failed", r.failed}});
  }
  return doc.dump(2) + "\n";
}

}  // namespace picbox
