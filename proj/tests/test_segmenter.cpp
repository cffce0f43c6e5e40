#include <doctest.h>

#include <httplib.h>

#include <random>
#include <thread>

#include "picbox/segmenter.hpp"

using namespace picbox;

namespace {

BinaryMask mask_from_rows(int width, int height, const std::vector<std::string>& rows) {
  BinaryMask mask(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) mask.at(x, y) = rows[y][x] == '#';
  }
  return mask;
}

}  // namespace

TEST_CASE("rle encodes column-major with a leading background run") {
  const BinaryMask corner = mask_from_rows(2, 2, {"#.", ".."});
  CHECK(rle_encode(corner).counts == std::vector<std::int64_t>{0, 1, 3});

  const BinaryMask empty(4, 4);
  CHECK(rle_encode(empty).counts == std::vector<std::int64_t>{16});

  const BinaryMask full(4, 4, 1);
  CHECK(rle_encode(full).counts == std::vector<std::int64_t>{0, 16});

  // Column-major: the second column's top pixel follows the whole first column.
  const BinaryMask stripe = mask_from_rows(3, 2, {".#.", ".#."});
  CHECK(rle_encode(stripe).counts == std::vector<std::int64_t>{2, 2, 2});
}

TEST_CASE("rle round trips random masks exactly") {
  std::mt19937 rng(5);
  std::uniform_int_distribution<int> dim(1, 64);
  std::uniform_real_distribution<double> density(0.0, 1.0);
  for (int n = 0; n < 200; ++n) {
    BinaryMask mask(dim(rng), dim(rng));
    const double p = density(rng);
    std::bernoulli_distribution bit(p);
    for (auto& px : mask.data) px = bit(rng);
    const MaskRLE rle = rle_encode(mask);
    rle.validate();
    const BinaryMask round = rle_decode(rle);
    CHECK(round.width == mask.width);
    CHECK(round.height == mask.height);
    CHECK(round.data == mask.data);
    CHECK(rle.foreground_area() ==
          std::count_if(mask.data.begin(), mask.data.end(), [](std::uint8_t v) { return v != 0; }));
  }
}

TEST_CASE("rle validation rejects inconsistent runs") {
  MaskRLE rle;
  rle.width = 2;
  rle.height = 2;
  rle.counts = {1, 1};
  CHECK_THROWS_AS(rle.validate(), std::invalid_argument);
  rle.counts = {-1, 5};
  CHECK_THROWS_AS(rle.validate(), std::invalid_argument);
  rle.counts = {0, 4};
  CHECK_NOTHROW(rle.validate());
  CHECK_FALSE(rle.empty_foreground());
  rle.counts = {4};
  CHECK(rle.empty_foreground());
}

TEST_CASE("bbox_from_mask finds the tight foreground box") {
  const BinaryMask mask = mask_from_rows(6, 5, {"......",
                                                "..##..",
                                                "..###.",
                                                "...#..",
                                                "......"});
  const BBox box = bbox_from_mask(rle_encode(mask));
  CHECK(box.rect == PixelRect{2, 1, 3, 3});
  CHECK(box.source == BoxSource::segmenter);

  const BinaryMask empty(3, 3);
  CHECK_THROWS_AS(bbox_from_mask(rle_encode(empty)), std::invalid_argument);
}

TEST_CASE("rectangle masks turn into their four corners") {
  BinaryMask mask(10, 8);
  for (int y = 2; y < 6; ++y) {
    for (int x = 3; x < 8; ++x) mask.at(x, y) = 1;
  }
  const auto polygon = mask_to_polygon(mask);
  REQUIRE(polygon.size() == 4);
  CHECK(polygon[0] == std::pair{3.0, 2.0});
  CHECK(polygon[1] == std::pair{8.0, 2.0});
  CHECK(polygon[2] == std::pair{8.0, 6.0});
  CHECK(polygon[3] == std::pair{3.0, 6.0});
}

TEST_CASE("a single pixel becomes its four corners") {
  BinaryMask mask(4, 4);
  mask.at(2, 1) = 1;
  const auto polygon = mask_to_polygon(mask);
  REQUIRE(polygon.size() == 4);
  CHECK(polygon[0] == std::pair{2.0, 1.0});
  CHECK(polygon[1] == std::pair{3.0, 1.0});
  CHECK(polygon[2] == std::pair{3.0, 2.0});
  CHECK(polygon[3] == std::pair{2.0, 2.0});
}

TEST_CASE("an L-shape keeps all six corners in walk order") {
  const BinaryMask mask = mask_from_rows(3, 3, {"#..",
                                                "##.",
                                                "..."});
  const auto polygon = mask_to_polygon(mask);
  const std::vector<std::pair<double, double>> expected = {
      {0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {2.0, 1.0}, {2.0, 2.0}, {0.0, 2.0}};
  CHECK(polygon == expected);
}

TEST_CASE("diagonally touching pixels trace as one pinched outline") {
  const BinaryMask mask = mask_from_rows(2, 2, {"#.", ".#"});
  const auto polygon = mask_to_polygon(mask);
  const std::vector<std::pair<double, double>> expected = {
      {0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {2.0, 1.0},
      {2.0, 2.0}, {1.0, 2.0}, {1.0, 1.0}, {0.0, 1.0}};
  CHECK(polygon == expected);
}

TEST_CASE("only the largest component is traced") {
  const BinaryMask mask = mask_from_rows(7, 3, {"##...#.",
                                                "##.....",
                                                "......."});
  const auto polygon = mask_to_polygon(mask);
  REQUIRE(polygon.size() == 4);
  CHECK(polygon[0] == std::pair{0.0, 0.0});
  CHECK(polygon[2] == std::pair{2.0, 2.0});
}

TEST_CASE("empty masks yield an empty polygon") {
  CHECK(mask_to_polygon(BinaryMask(5, 5)).empty());
}

TEST_CASE("request codec round trips frames and prompts") {
  GrayFrame frame(5, 4);
  for (std::size_t n = 0; n < frame.data.size(); ++n) {
    frame.data[n] = static_cast<std::uint8_t>(n * 13 % 256);
  }
  std::vector<BBox> boxes;
  boxes.push_back({{1, 1, 3, 2}, BoxSource::pic});
  boxes.push_back({{0, 0, 5, 4}, BoxSource::pic});

  const auto [round_frame, prompts] = decode_segment_request(encode_segment_request(frame, boxes));
  CHECK(round_frame.width == 5);
  CHECK(round_frame.height == 4);
  CHECK(round_frame.data == frame.data);
  REQUIRE(prompts.size() == 2);
  CHECK(prompts[0] == PixelRect{1, 1, 3, 2});
  CHECK(prompts[1] == PixelRect{0, 0, 5, 4});
}

TEST_CASE("response codec round trips masks and rejects malformed documents") {
  BinaryMask mask(3, 3);
  mask.at(1, 1) = 1;
  std::vector<SegmentResult> results;
  results.push_back({rle_encode(mask), 0.75, false});

  const auto round = decode_segment_response(encode_segment_response(results), 1, 3, 3);
  REQUIRE(round.size() == 1);
  CHECK(round[0].mask.counts == results[0].mask.counts);
  CHECK(round[0].confidence == 0.75);
  CHECK_FALSE(round[0].failed);

  CHECK_THROWS_AS(decode_segment_response("not json", 1, 3, 3), ProtocolError);
  CHECK_THROWS_AS(decode_segment_response(R"({"version":"v1","masks":[]})", 1, 3, 3),
                  ProtocolError);
  CHECK_THROWS_AS(decode_segment_response(encode_segment_response(results), 2, 3, 3),
                  ProtocolError);
  CHECK_THROWS_AS(decode_segment_response(encode_segment_response(results), 1, 4, 3),
                  ProtocolError);
  const std::string bad_version = R"({"version":"v9","masks":[
      {"width":3,"height":3,"counts":[9],"confidence":1.0}]})";
  CHECK_THROWS_AS(decode_segment_response(bad_version, 1, 3, 3), ProtocolError);
  const std::string bad_confidence = R"({"version":"v1","masks":[
      {"width":3,"height":3,"counts":[9],"confidence":1.5}]})";
  CHECK_THROWS_AS(decode_segment_response(bad_confidence, 1, 3, 3), ProtocolError);
}

TEST_CASE("malformed requests raise protocol errors") {
  CHECK_THROWS_AS(decode_segment_request("["), ProtocolError);
  CHECK_THROWS_AS(decode_segment_request(R"({"version":"v1"})"), ProtocolError);
}

TEST_CASE("the mock server echoes prompts as filled masks") {
  MockSegmentServer server;
  server.start();

  GrayFrame frame(64, 48);
  std::fill(frame.data.begin(), frame.data.end(), 180);
  std::vector<BBox> boxes;
  boxes.push_back({{4, 6, 10, 8}, BoxSource::pic});
  boxes.push_back({{30, 20, 5, 5}, BoxSource::pic});
  boxes.push_back({{0, 0, 64, 48}, BoxSource::pic});

  const auto results = segment_boxes(server.endpoint(), frame, boxes);
  REQUIRE(results.size() == 3);
  for (std::size_t n = 0; n < results.size(); ++n) {
    CHECK_FALSE(results[n].failed);
    CHECK(results[n].confidence == 1.0);
    CHECK(bbox_from_mask(results[n].mask).rect == boxes[n].rect);
    CHECK(results[n].mask.foreground_area() == boxes[n].rect.area());
  }
  server.stop();
}

TEST_CASE("prompt order survives batching and parallel workers") {
  MockSegmentServer server;
  server.start();

  GrayFrame frame(120, 90);
  std::vector<BBox> boxes;
  for (int n = 0; n < 37; ++n) {
    boxes.push_back({{n % 80, n % 60, 1 + n % 30, 1 + (n * 7) % 25}, BoxSource::pic});
  }
  SegmentPolicy policy;
  policy.parallelism = 4;
  policy.batch_size = 3;
  const auto results = segment_boxes(server.endpoint(), frame, boxes, policy);
  REQUIRE(results.size() == boxes.size());
  for (std::size_t n = 0; n < boxes.size(); ++n) {
    const PixelRect expected = intersect(boxes[n].rect, PixelRect{0, 0, 120, 90});
    CHECK(bbox_from_mask(results[n].mask).rect == expected);
  }
  server.stop();
}

TEST_CASE("no prompts means no network traffic") {
  const GrayFrame frame(8, 8);
  const auto results = segment_boxes("http://127.0.0.1:1", frame, {});
  CHECK(results.empty());
}

TEST_CASE("prompts outside the frame are rejected locally") {
  const GrayFrame frame(8, 8);
  std::vector<BBox> boxes;
  boxes.push_back({{5, 5, 10, 10}, BoxSource::pic});
  CHECK_THROWS_AS(segment_boxes("http://127.0.0.1:1", frame, boxes), std::invalid_argument);
}

TEST_CASE("an unreachable endpoint raises a service error naming the prompts") {
  GrayFrame frame(8, 8);
  std::vector<BBox> boxes;
  boxes.push_back({{1, 1, 4, 4}, BoxSource::pic});
  boxes.push_back({{2, 2, 3, 3}, BoxSource::pic});
  SegmentPolicy policy;
  policy.max_attempts = 1;
  policy.backoff_initial_ms = 1;
  policy.timeout_s = 2;
  try {
    segment_boxes("http://127.0.0.1:1", frame, boxes, policy);
    FAIL("expected ServiceError");
  } catch (const ServiceError& e) {
    const std::string what = e.what();
    CHECK(what.find("0..1") != std::string::npos);
  }
}

TEST_CASE("http error statuses raise protocol errors without retry loops") {
  httplib::Server broken;
  int hits = 0;
  broken.Post("/segment", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 422;
    res.set_content("{\"error\":\"bad prompt\"}", "application/json");
  });
  const int port = broken.bind_to_any_port("127.0.0.1");
  std::thread serve([&] { broken.listen_after_bind(); });
  broken.wait_until_ready();

  GrayFrame frame(8, 8);
  std::vector<BBox> boxes;
  boxes.push_back({{1, 1, 4, 4}, BoxSource::pic});
  SegmentPolicy policy;
  policy.max_attempts = 3;
  policy.backoff_initial_ms = 1;
  CHECK_THROWS_AS(
      segment_boxes("http://127.0.0.1:" + std::to_string(port), frame, boxes, policy),
      ProtocolError);
  CHECK(hits == 1);

  broken.stop();
  serve.join();
}

TEST_CASE("garbage 200 responses raise protocol errors") {
  httplib::Server broken;
  broken.Post("/segment", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("ok then", "text/plain");
  });
  const int port = broken.bind_to_any_port("127.0.0.1");
  std::thread serve([&] { broken.listen_after_bind(); });
  broken.wait_until_ready();

  GrayFrame frame(8, 8);
  std::vector<BBox> boxes;
  boxes.push_back({{1, 1, 4, 4}, BoxSource::pic});
  CHECK_THROWS_AS(segment_boxes("http://127.0.0.1:" + std::to_string(port), frame, boxes),
                  ProtocolError);

  broken.stop();
  serve.join();
}

TEST_CASE("flaky services succeed once a retry lands") {
  std::atomic<int> calls{0};
  httplib::Server flaky;
  flaky.Post("/segment", [&](const httplib::Request& req, httplib::Response& res) {
    if (calls.fetch_add(1) == 0) {
      res.status = 503;
      return;
    }
    const auto [frame, prompts] = decode_segment_request(req.body);
    std::vector<SegmentResult> results;
    for (const PixelRect& prompt : prompts) {
      BinaryMask mask(frame.width, frame.height);
      for (int y = prompt.top; y < prompt.bottom(); ++y) {
        for (int x = prompt.left; x < prompt.right(); ++x) mask.at(x, y) = 1;
      }
      results.push_back({rle_encode(mask), 1.0, false});
    }
    res.set_content(encode_segment_response(results), "application/json");
  });
  const int port = flaky.bind_to_any_port("127.0.0.1");
  std::thread serve([&] { flaky.listen_after_bind(); });
  flaky.wait_until_ready();

  GrayFrame frame(16, 16);
  std::vector<BBox> boxes;
  boxes.push_back({{2, 2, 5, 5}, BoxSource::pic});
  SegmentPolicy policy;
  policy.max_attempts = 3;
  policy.backoff_initial_ms = 1;
  const auto results =
      segment_boxes("http://127.0.0.1:" + std::to_string(port), frame, boxes, policy);
  REQUIRE(results.size() == 1);
  CHECK(bbox_from_mask(results[0].mask).rect == PixelRect{2, 2, 5, 5});
  CHECK(calls.load() >= 2);

  flaky.stop();
  serve.join();
}
