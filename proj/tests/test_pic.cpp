#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <random>

#include "picbox/pic.hpp"
#include "picbox/synth.hpp"

using namespace picbox;

namespace {

// 10x10 target at intensity 50 centered in a 100x100 background of 200.
SceneSpec dark_square_scene() {
  SceneSpec spec;
  spec.width = 100;
  spec.height = 100;
  spec.background = 200;
  spec.targets = {{TargetShape::rect, 50.0, 50.0, 10, 10, 50}};
  return spec;
}

GrayFrame uniform_frame(int width, int height, std::uint8_t value) {
  GrayFrame frame(width, height);
  std::fill(frame.data.begin(), frame.data.end(), value);
  return frame;
}

}  // namespace

TEST_CASE("init_box centers the seed patch on the point") {
  PicConfig config;
  CHECK(init_box({50.0, 50.0, 0, {}}, config) == PixelRect{46, 46, 8, 8});
  config.w0 = 5;
  config.h0 = 5;
  CHECK(init_box({50.0, 50.0, 0, {}}, config) == PixelRect{48, 48, 5, 5});
  CHECK(init_box({50.4, 50.4, 0, {}}, config) == PixelRect{48, 48, 5, 5});
}

TEST_CASE("expand grows a rect about its own center") {
  PicConfig config;
  config.delta = 5;
  CHECK(expand({96, 96, 8, 8}, config) == PixelRect{94, 94, 13, 13});
  config.delta = 2;
  CHECK(expand({10, 10, 4, 6}, config) == PixelRect{9, 9, 6, 8});
}

TEST_CASE("config validation rejects non-positive parameters") {
  PicConfig config;
  config.w0 = 0;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config = {};
  config.delta = 0;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config = {};
  config.epsilon = 0.0;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config = {};
  config.max_iters = 0;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
}

TEST_CASE("dark square on bright background converges to the pre-expansion box") {
  const RenderResult scene = render(dark_square_scene());
  const PicResult result = pic_box(scene.frame, {50.0, 50.0, 0, {}}, PicConfig{});

  CHECK(result.trace.halt == HaltStatus::converged);
  CHECK(result.box.rect == PixelRect{34, 34, 33, 33});
  CHECK(result.box.source == BoxSource::pic);

  REQUIRE(result.trace.means.size() == 7);
  REQUIRE(result.trace.boxes.size() == 7);
  // Means follow bg - (bg - fg) * 100 / area for areas 169..1444 once the
  // target is fully covered; the seed box sits entirely inside the target.
  const double expected[] = {50.0,
                             200.0 - 15000.0 / 169.0,
                             200.0 - 15000.0 / 324.0,
                             200.0 - 15000.0 / 529.0,
                             200.0 - 15000.0 / 784.0,
                             200.0 - 15000.0 / 1089.0,
                             200.0 - 15000.0 / 1444.0};
  for (int t = 0; t < 7; ++t) {
    CHECK(result.trace.means[t] == doctest::Approx(expected[t]).epsilon(1e-12));
  }
  CHECK(result.trace.boxes.front() == PixelRect{46, 46, 8, 8});
  CHECK(result.trace.boxes.back() == PixelRect{31, 31, 38, 38});
}

TEST_CASE("return_expanded hands back the box that triggered convergence") {
  const RenderResult scene = render(dark_square_scene());
  PicConfig config;
  config.return_expanded = true;
  const PicResult result = pic_box(scene.frame, {50.0, 50.0, 0, {}}, config);
  CHECK(result.box.rect == PixelRect{31, 31, 38, 38});
}

TEST_CASE("uniform frames halt after one expansion with the seed box") {
  const GrayFrame frame = uniform_frame(64, 64, 91);
  const PicResult result = pic_box(frame, {30.0, 30.0, 0, {}}, PicConfig{});
  CHECK(result.trace.halt == HaltStatus::converged);
  CHECK(result.box.rect == init_box({30.0, 30.0, 0, {}}, PicConfig{}));
  CHECK(result.trace.means.size() == 2);
  CHECK(result.trace.means[0] == 91.0);
  CHECK(result.trace.means[1] == 91.0);
}

TEST_CASE("results are deterministic") {
  const RenderResult scene = render(dark_square_scene());
  const PicResult a = pic_box(scene.frame, {47.3, 52.9, 0, {}}, PicConfig{});
  const PicResult b = pic_box(scene.frame, {47.3, 52.9, 0, {}}, PicConfig{});
  CHECK(a.box.rect == b.box.rect);
  CHECK(a.trace.boxes == b.trace.boxes);
  CHECK(a.trace.means == b.trace.means);
}

TEST_CASE("integer translation of scene and point shifts the box exactly") {
  SceneSpec spec;
  spec.width = 200;
  spec.height = 160;
  spec.background = 180;
  spec.targets = {{TargetShape::rect, 60.0, 70.0, 14, 9, 40}};
  const GrayFrame frame = render(spec).frame;

  SceneSpec moved = spec;
  moved.targets[0].cx += 31;
  moved.targets[0].cy += 17;
  const GrayFrame shifted = render(moved).frame;

  const PicResult base = pic_box(frame, {60.0, 70.0, 0, {}}, PicConfig{});
  const PicResult off = pic_box(shifted, {91.0, 87.0, 0, {}}, PicConfig{});
  CHECK(off.box.rect.left == base.box.rect.left + 31);
  CHECK(off.box.rect.top == base.box.rect.top + 17);
  CHECK(off.box.rect.width == base.box.rect.width);
  CHECK(off.box.rect.height == base.box.rect.height);
  CHECK(off.trace.halt == base.trace.halt);
}

TEST_CASE("adding a constant to every pixel never changes boxes or halting") {
  SceneSpec spec;
  spec.width = 120;
  spec.height = 120;
  spec.background = 90;
  spec.targets = {{TargetShape::rect, 61.0, 58.0, 17, 17, 30}};
  const GrayFrame frame = render(spec).frame;
  GrayFrame brighter = frame;
  for (auto& px : brighter.data) px = static_cast<std::uint8_t>(px + 60);

  for (double epsilon : {0.5, 1.0, 4.0, 16.0}) {
    PicConfig config;
    config.epsilon = epsilon;
    const PicResult a = pic_box(frame, {61.0, 58.0, 0, {}}, config);
    const PicResult b = pic_box(brighter, {61.0, 58.0, 0, {}}, config);
    CHECK(a.box.rect == b.box.rect);
    CHECK(a.trace.boxes == b.trace.boxes);
    CHECK(a.trace.halt == b.trace.halt);
    for (std::size_t t = 0; t < a.trace.means.size(); ++t) {
      CHECK(b.trace.means[t] == doctest::Approx(a.trace.means[t] + 60.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("the convergence comparison is strict") {
  // Uniform frame: the delta is exactly 0, which is below any positive
  // epsilon but not below 0 itself.
  CHECK(mean_delta_below(910, 10, 91, 1, 1e-300));
  CHECK_FALSE(mean_delta_below(910, 10, 91, 1, 0.0));
  // 50 -> 111.24... on areas 64 and 169 is a delta of about 61.2.
  CHECK_FALSE(mean_delta_below(3200, 64, 18800, 169, 61.0));
  CHECK(mean_delta_below(3200, 64, 18800, 169, 61.5));
}

TEST_CASE("expansion limit reports max_iters_reached") {
  // Radial ramp: every expansion adds pixels brighter than the running
  // mean, so the delta never vanishes.
  GrayFrame frame(600, 600);
  for (int y = 0; y < 600; ++y) {
    for (int x = 0; x < 600; ++x) {
      frame.at(x, y) = static_cast<std::uint8_t>(std::min(255, std::abs(x - 300) + std::abs(y - 300)));
    }
  }
  PicConfig config;
  config.epsilon = 1e-9;
  config.max_iters = 5;
  const PicResult result = pic_box(frame, {300.0, 300.0, 0, {}}, config);
  CHECK(result.trace.halt == HaltStatus::max_iters_reached);
  CHECK(result.trace.means.size() == 6);
  CHECK(result.box.rect == result.trace.boxes.back());
}

TEST_CASE("growing past the frame halts as saturated with the clipped box") {
  GrayFrame frame(10, 10);
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 10; ++x) frame.at(x, y) = static_cast<std::uint8_t>(x * 25);
  }
  PicConfig config;
  config.epsilon = 1e-9;
  const PicResult result = pic_box(frame, {2.0, 2.0, 0, {}}, config);
  CHECK(result.trace.halt == HaltStatus::frame_saturated);
  CHECK(result.box.rect == PixelRect{0, 0, 10, 10});
  CHECK(result.trace.means.size() == result.trace.boxes.size());
}

TEST_CASE("a 1x1 frame saturates immediately") {
  const GrayFrame frame = uniform_frame(1, 1, 7);
  const PicResult result = pic_box(frame, {0.5, 0.5, 0, {}}, PicConfig{});
  CHECK(result.trace.halt == HaltStatus::frame_saturated);
  CHECK(result.box.rect == PixelRect{0, 0, 1, 1});
  CHECK(result.trace.means.size() == 1);
}

TEST_CASE("points whose seed box misses the frame are rejected") {
  const GrayFrame frame = uniform_frame(50, 50, 100);
  CHECK_THROWS_AS(pic_box(frame, {-40.0, -40.0, 0, {}}, PicConfig{}), OutsideFrameError);
  CHECK_THROWS_AS(pic_box(frame, {500.0, 25.0, 0, {}}, PicConfig{}), OutsideFrameError);
}

TEST_CASE("batch extraction preserves order and isolates failures") {
  const RenderResult scene = render(dark_square_scene());
  std::vector<PicBatchItem> items;
  items.push_back({&scene.frame, {50.0, 50.0, 0, {}}});
  items.push_back({&scene.frame, {-500.0, -500.0, 1, {}}});
  items.push_back({&scene.frame, {50.0, 50.0, 2, {}}});
  items.push_back({nullptr, {1.0, 1.0, 3, {}}});

  const auto results = pic_batch(items, PicConfig{}, 3);
  REQUIRE(results.size() == 4);
  CHECK(results[0].ok);
  CHECK(results[0].result.box.rect == PixelRect{34, 34, 33, 33});
  CHECK_FALSE(results[1].ok);
  CHECK(results[1].error.find("outside") != std::string::npos);
  CHECK(results[2].ok);
  CHECK(results[2].result.box.rect == PixelRect{34, 34, 33, 33});
  CHECK_FALSE(results[3].ok);
}

TEST_CASE("batch results match single-shot results for random points") {
  const RenderResult scene = render(dark_square_scene());
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> coord(10.0, 90.0);
  std::vector<PicBatchItem> items;
  for (int n = 0; n < 64; ++n) {
    items.push_back({&scene.frame, {coord(rng), coord(rng), n, {}}});
  }
  const auto parallel = pic_batch(items, PicConfig{}, 4);
  for (std::size_t n = 0; n < items.size(); ++n) {
    REQUIRE(parallel[n].ok);
    const PicResult solo = pic_box(scene.frame, items[n].point, PicConfig{});
    CHECK(parallel[n].result.box.rect == solo.box.rect);
    CHECK(parallel[n].result.trace.means == solo.trace.means);
  }
}
