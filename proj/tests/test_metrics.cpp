#include <doctest.h>

#include <random>

#include "picbox/baselines.hpp"
#include "picbox/metrics.hpp"
#include "picbox/pic.hpp"
#include "picbox/synth.hpp"

using namespace picbox;

namespace {

double brute_iou(const PixelRect& a, const PixelRect& b) {
  std::int64_t inter = 0, either = 0;
  const int x0 = std::min(a.left, b.left), x1 = std::max(a.right(), b.right());
  const int y0 = std::min(a.top, b.top), y1 = std::max(a.bottom(), b.bottom());
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      const bool ina = contains(a, x, y), inb = contains(b, x, y);
      inter += ina && inb;
      either += ina || inb;
    }
  }
  return static_cast<double>(inter) / static_cast<double>(either);
}

}  // namespace

TEST_CASE("iou hits the textbook values") {
  CHECK(iou(PixelRect{10, 10, 20, 20}, PixelRect{10, 10, 20, 20}) == 1.0);
  CHECK(iou(PixelRect{0, 0, 5, 5}, PixelRect{5, 0, 5, 5}) == 0.0);
  CHECK(iou(PixelRect{0, 0, 5, 5}, PixelRect{100, 100, 3, 3}) == 0.0);
  CHECK(iou(PixelRect{0, 0, 2, 2}, PixelRect{1, 0, 2, 2}) == doctest::Approx(1.0 / 3.0));
  CHECK(iou(PixelRect{34, 34, 33, 33}, PixelRect{25, 25, 50, 50}) ==
        doctest::Approx(1089.0 / 2500.0));
}

TEST_CASE("iou rejects empty boxes") {
  CHECK_THROWS_AS(iou(PixelRect{0, 0, 0, 5}, PixelRect{0, 0, 5, 5}), std::invalid_argument);
  CHECK_THROWS_AS(iou(PixelRect{0, 0, 5, 5}, PixelRect{0, 0, 5, -1}), std::invalid_argument);
}

TEST_CASE("iou is symmetric and matches pixel counting") {
  std::mt19937 rng(77);
  std::uniform_int_distribution<int> pos(0, 40), len(1, 24);
  for (int n = 0; n < 300; ++n) {
    const PixelRect a{pos(rng), pos(rng), len(rng), len(rng)};
    const PixelRect b{pos(rng), pos(rng), len(rng), len(rng)};
    const double ab = iou(a, b);
    CHECK(ab == iou(b, a));
    CHECK(ab == brute_iou(a, b));
  }
}

TEST_CASE("containment reduces iou to an area ratio") {
  const PixelRect outer{10, 10, 40, 40};
  const PixelRect inner{20, 20, 10, 10};
  CHECK(iou(outer, inner) == doctest::Approx(100.0 / 1600.0));
}

TEST_CASE("evaluate scores every method on every item") {
  SceneSpec spec;
  spec.width = 100;
  spec.height = 100;
  spec.background = 200;
  spec.targets = {{TargetShape::rect, 50.0, 50.0, 10, 10, 50}};
  const RenderResult scene = render(spec);

  std::vector<EvalItem> items;
  items.push_back({"a", &scene.frame, {50.0, 50.0, 0, {}}, scene.truth[0]});
  items.push_back({"b", &scene.frame, {49.0, 51.0, 1, {}}, scene.truth[0]});

  std::vector<NamedExtractor> methods;
  methods.push_back({"pic", [](const GrayFrame& frame, const TrajectoryPoint& point) {
                       return pic_box(frame, point, PicConfig{}).box;
                     }});
  methods.push_back({"threshold", [](const GrayFrame& frame, const TrajectoryPoint& point) {
                       return threshold_box(frame, point, ThresholdConfig{}).box;
                     }});

  const EvalOutcome outcome = evaluate(items, methods);
  REQUIRE(outcome.records.size() == 4);
  REQUIRE(outcome.summaries.size() == 2);
  CHECK(outcome.summaries[0].method == "pic");
  CHECK(outcome.summaries[0].n == 2);
  CHECK(outcome.summaries[1].method == "threshold");
  CHECK(outcome.summaries[1].mean_iou == doctest::Approx(1.0));
  for (const EvalRecord& record : outcome.records) {
    CHECK_FALSE(record.failed);
    CHECK(record.iou > 0.0);
    CHECK(record.elapsed >= 0.0);
  }
}

TEST_CASE("failing items are recorded, not thrown") {
  const GrayFrame frame(20, 20);
  std::vector<EvalItem> items;
  items.push_back({"good", &frame, {10.0, 10.0, 0, {}}, BBox{{8, 8, 4, 4}, BoxSource::human}});
  items.push_back({"bad", &frame, {500.0, 500.0, 1, {}}, BBox{{8, 8, 4, 4}, BoxSource::human}});

  std::vector<NamedExtractor> methods;
  methods.push_back({"pic", [](const GrayFrame& f, const TrajectoryPoint& p) {
                       return pic_box(f, p, PicConfig{}).box;
                     }});

  const EvalOutcome outcome = evaluate(items, methods);
  REQUIRE(outcome.records.size() == 2);
  CHECK_FALSE(outcome.records[0].failed);
  CHECK(outcome.records[1].failed);
  CHECK(outcome.records[1].iou == 0.0);
  CHECK(outcome.summaries[0].mean_iou == doctest::Approx(outcome.records[0].iou / 2.0));
}

TEST_CASE("median timing uses the middle sample") {
  const GrayFrame frame = [] {
    GrayFrame f(64, 64);
    std::fill(f.data.begin(), f.data.end(), 50);
    return f;
  }();
  const double median = time_extractor(
      [](const GrayFrame& f, const TrajectoryPoint& p) {
        return pic_box(f, p, PicConfig{}).box;
      },
      frame, {32.0, 32.0, 0, {}}, 21);
  CHECK(median > 0.0);
  CHECK(median < 1.0);
}

TEST_CASE("summary table and JSON name every method") {
  std::vector<MethodSummary> summaries;
  summaries.push_back({"pic", 0.75, 0.001, 10});
  summaries.push_back({"fixed", 0.25, 0.0001, 10});
  const std::string table = format_summary_table(summaries);
  CHECK(table.find("pic") != std::string::npos);
  CHECK(table.find("fixed") != std::string::npos);
  CHECK(table.find("0.7500") != std::string::npos);

  const std::string json = summaries_to_json(summaries);
  CHECK(json.find("\"method\": \"pic\"") != std::string::npos);
  CHECK(json.find("\"mean_iou\"") != std::string::npos);
}

TEST_CASE("record JSON carries ids and methods") {
  std::vector<EvalRecord> records;
  EvalRecord record;
  record.item_id = "frame_000007";
  record.method = "pic";
  record.predicted = BBox{{1, 2, 3, 4}, BoxSource::pic};
  record.truth = BBox{{1, 2, 3, 4}, BoxSource::human};
  record.iou = 1.0;
  record.elapsed = 0.002;
  records.push_back(record);
  const std::string json = records_to_json(records);
  CHECK(json.find("frame_000007") != std::string::npos);
  CHECK(json.find("\"iou\": 1.0") != std::string::npos);
}
