#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "picbox/imaging.hpp"

namespace picbox {

// Binary raster, row-major, 0 = background, nonzero = foreground.
struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  BinaryMask() = default;
  BinaryMask(int w, int h, std::uint8_t fill = 0);
  std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
};

// Column-major run-length encoding, alternating background/foreground and
// starting with a (possibly zero) background run. Compatible with the common
// COCO counts convention.
struct MaskRLE {
  int width = 0;
  int height = 0;
  std::vector<std::int64_t> counts;

  void validate() const;
  bool empty_foreground() const;
  std::int64_t foreground_area() const;
};

MaskRLE rle_encode(const BinaryMask& mask);
BinaryMask rle_decode(const MaskRLE& rle);

// Tight axis-aligned box over the foreground; throws on an empty mask.
BBox bbox_from_mask(const MaskRLE& rle);

// Outer contour of the largest foreground component, as pixel-corner
// coordinates walked clockwise (image coords, y down). A rectangle yields its
// four exact corners; a single pixel yields that pixel's four corners.
std::vector<std::pair<double, double>> mask_to_polygon(const BinaryMask& mask);

struct SegmentPolicy {
  int parallelism = 4;      // bounded in-flight requests
  int batch_size = 8;       // prompts per request
  int max_attempts = 3;     // per request, with exponential backoff
  int backoff_initial_ms = 50;
  int timeout_s = 30;
};

struct SegmentResult {
  MaskRLE mask;
  double confidence = 0.0;
  bool failed = false;
};

struct ServiceError : std::runtime_error {
  explicit ServiceError(const std::string& what) : std::runtime_error(what) {}
};
struct ProtocolError : std::runtime_error {
  explicit ProtocolError(const std::string& what) : std::runtime_error(what) {}
};

// POSTs the frame plus box prompts to a segmentation endpoint (schema v1)
// and returns one mask per box, in prompt order regardless of internal
// concurrency. Throws ServiceError when the endpoint stays unreachable,
// ProtocolError on malformed responses.
std::vector<SegmentResult> segment_boxes(const std::string& endpoint, const GrayFrame& frame,
                                         const std::vector<BBox>& boxes,
                                         const SegmentPolicy& policy = {});

// In-process test server implementing schema v1: each prompt box is echoed
// back as a filled mask with confidence 1.
class MockSegmentServer {
 public:
  MockSegmentServer();
  ~MockSegmentServer();
  MockSegmentServer(const MockSegmentServer&) = delete;
  MockSegmentServer& operator=(const MockSegmentServer&) = delete;

  // Binds localhost on `port` (0 picks a free port) and serves on a
  // background thread until stop() or destruction.
  int start(int port = 0);
  void stop();
  std::string endpoint() const;  // "http://127.0.0.1:<port>"

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Wire codecs (schema v1), exposed for protocol tests. Decoders throw
// ProtocolError on malformed documents.
std::string encode_segment_request(const GrayFrame& frame, const std::vector<BBox>& boxes);
std::pair<GrayFrame, std::vector<PixelRect>> decode_segment_request(const std::string& body);
std::string encode_segment_response(const std::vector<SegmentResult>& results);
std::vector<SegmentResult> decode_segment_response(const std::string& body,
                                                   std::size_t expected_count, int width,
                                                   int height);

}  // namespace picbox
