#include <algorithm>
#include <atomic>
#include <chrono>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "picbox/segmenter.hpp"
#include "picbox/version.hpp"

namespace picbox {

namespace {

constexpr char kBase64Chars[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 3 <= bytes.size(); i += 3) {
    const std::uint32_t chunk = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kBase64Chars[(chunk >> 18) & 63];
    out += kBase64Chars[(chunk >> 12) & 63];
    out += kBase64Chars[(chunk >> 6) & 63];
    out += kBase64Chars[chunk & 63];
  }
  const std::size_t rest = bytes.size() - i;
  if (rest == 1) {
    const std::uint32_t chunk = bytes[i] << 16;
    out += kBase64Chars[(chunk >> 18) & 63];
    out += kBase64Chars[(chunk >> 12) & 63];
    out += "==";
  } else if (rest == 2) {
    const std::uint32_t chunk = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out += kBase64Chars[(chunk >> 18) & 63];
    out += kBase64Chars[(chunk >> 12) & 63];
    out += kBase64Chars[(chunk >> 6) & 63];
    out += '=';
  }
  return out;
}

int base64_value(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  if (text.size() % 4 != 0) throw std::invalid_argument("base64 length must be a multiple of 4");
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    int values[4];
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = text[i + k];
      if (c == '=' && i + 4 == text.size() && k >= 2) {
        values[k] = 0;
        ++pad;
      } else {
        values[k] = base64_value(c);
        if (values[k] < 0 || pad > 0) throw std::invalid_argument("invalid base64 input");
      }
    }
    const std::uint32_t chunk =
        (values[0] << 18) | (values[1] << 12) | (values[2] << 6) | values[3];
    out.push_back((chunk >> 16) & 0xff);
    if (pad < 2) out.push_back((chunk >> 8) & 0xff);
    if (pad < 1) out.push_back(chunk & 0xff);
  }
  return out;
}

}  // namespace

std::string encode_segment_request(const GrayFrame& frame, const std::vector<BBox>& boxes) {
  nlohmann::ordered_json doc;
  doc["version"] = kWireVersion;
  doc["width"] = frame.width;
  doc["height"] = frame.height;
  doc["image_b64"] = base64_encode(frame.data);
  doc["prompts"] = nlohmann::ordered_json::array();
  for (const BBox& box : boxes) {
    doc["prompts"].push_back({{"left", box.rect.left},
                              {"top", box.rect.top},
                              {"width", box.rect.width},
                              {"height", box.rect.height}});
  }
  return doc.dump();
}

std::pair<GrayFrame, std::vector<PixelRect>> decode_segment_request(const std::string& body) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("request is not valid JSON: ") + e.what());
  }
  try {
    if (doc.at("version").get<std::string>() != kWireVersion) {
      throw ProtocolError("unsupported protocol version");
    }
    const int width = doc.at("width").get<int>();
    const int height = doc.at("height").get<int>();
    if (width < 1 || height < 1) throw ProtocolError("invalid frame dimensions");
    std::vector<std::uint8_t> pixels = base64_decode(doc.at("image_b64").get<std::string>());
    if (pixels.size() != static_cast<std::size_t>(width) * height) {
      throw ProtocolError("image payload size does not match dimensions");
    }
    GrayFrame frame(width, height, std::move(pixels));
    std::vector<PixelRect> prompts;
    for (const auto& item : doc.at("prompts")) {
      prompts.push_back(PixelRect{item.at("left").get<int>(), item.at("top").get<int>(),
                                  item.at("width").get<int>(), item.at("height").get<int>()});
    }
    return {std::move(frame), std::move(prompts)};
  } catch (const ProtocolError&) {
    throw;
  } catch (const std::exception& e) {
    throw ProtocolError(std::string("malformed request: ") + e.what());
  }
}

std::string encode_segment_response(const std::vector<SegmentResult>& results) {
  nlohmann::ordered_json doc;
  doc["version"] = kWireVersion;
  doc["masks"] = nlohmann::ordered_json::array();
  for (const SegmentResult& result : results) {
    doc["masks"].push_back({{"width", result.mask.width},
                            {"height", result.mask.height},
                            {"counts", result.mask.counts},
                            {"confidence", result.confidence}});
  }
  return doc.dump();
}

std::vector<SegmentResult> decode_segment_response(const std::string& body,
                                                   std::size_t expected_count, int width,
                                                   int height) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("response is not valid JSON: ") + e.what());
  }
  try {
    if (doc.at("version").get<std::string>() != kWireVersion) {
      throw ProtocolError("unsupported protocol version");
    }
    const auto& masks = doc.at("masks");
    if (masks.size() != expected_count) {
      throw ProtocolError("response mask count does not match prompt count");
    }
    std::vector<SegmentResult> results;
    results.reserve(masks.size());
    for (const auto& item : masks) {
      SegmentResult result;
      result.mask.width = item.at("width").get<int>();
      result.mask.height = item.at("height").get<int>();
      if (result.mask.width != width || result.mask.height != height) {
        throw ProtocolError("mask dimensions do not match the request image");
      }
      result.mask.counts = item.at("counts").get<std::vector<std::int64_t>>();
      result.mask.validate();
      result.confidence = item.at("confidence").get<double>();
      if (result.confidence < 0.0 || result.confidence > 1.0) {
        throw ProtocolError("confidence out of range");
      }
      result.failed = result.confidence == 0.0 && result.mask.empty_foreground();
      results.push_back(std::move(result));
    }
    return results;
  } catch (const ProtocolError&) {
    throw;
  } catch (const std::exception& e) {
    throw ProtocolError(std::string("malformed response: ") + e.what());
  }
}

std::vector<SegmentResult> segment_boxes(const std::string& endpoint, const GrayFrame& frame,
                                         const std::vector<BBox>& boxes,
                                         const SegmentPolicy& policy) {
  if (boxes.empty()) return {};
  if (policy.parallelism < 1 || policy.batch_size < 1 || policy.max_attempts < 1) {
    throw std::invalid_argument("segment policy values must be >= 1");
  }
  for (const BBox& box : boxes) {
    if (box.rect.width < 1 || box.rect.height < 1 || !contains(frame.bounds(), box.rect)) {
      throw std::invalid_argument("prompt boxes must be clipped to the frame");
    }
  }

  struct Batch {
    std::size_t begin = 0;
    std::size_t end = 0;
  };
  std::vector<Batch> batches;
  for (std::size_t begin = 0; begin < boxes.size();
       begin += static_cast<std::size_t>(policy.batch_size)) {
    batches.push_back(
        {begin, std::min(boxes.size(), begin + static_cast<std::size_t>(policy.batch_size))});
  }

  std::vector<SegmentResult> results(boxes.size());
  std::atomic<std::size_t> cursor{0};
  std::atomic<bool> cancelled{false};
  std::mutex failure_mutex;
  std::exception_ptr protocol_failure;
  std::vector<std::pair<std::size_t, std::size_t>> unserved;

  const auto worker = [&] {
    httplib::Client client(endpoint);
    client.set_connection_timeout(policy.timeout_s, 0);
    client.set_read_timeout(policy.timeout_s, 0);
    client.set_write_timeout(policy.timeout_s, 0);

    for (std::size_t n = cursor.fetch_add(1); n < batches.size(); n = cursor.fetch_add(1)) {
      if (cancelled.load()) return;
      const Batch batch = batches[n];
      const std::vector<BBox> slice(boxes.begin() + batch.begin, boxes.begin() + batch.end);
      const std::string body = encode_segment_request(frame, slice);

      bool served = false;
      for (int attempt = 1; attempt <= policy.max_attempts && !served; ++attempt) {
        if (cancelled.load()) return;
        httplib::Result res = client.Post("/segment", body, "application/json");
        if (res && res->status == 200) {
          try {
            std::vector<SegmentResult> decoded =
                decode_segment_response(res->body, slice.size(), frame.width, frame.height);
            std::move(decoded.begin(), decoded.end(), results.begin() + batch.begin);
            served = true;
            break;
          } catch (const ProtocolError&) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            if (!protocol_failure) protocol_failure = std::current_exception();
            cancelled.store(true);
            return;
          }
        }
        if (res && res->status >= 400 && res->status < 500) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!protocol_failure) {
            protocol_failure = std::make_exception_ptr(
                ProtocolError("server rejected request with status " +
                              std::to_string(res->status)));
          }
          cancelled.store(true);
          return;
        }
        if (attempt < policy.max_attempts) {
          std::this_thread::sleep_for(
              std::chrono::milliseconds(policy.backoff_initial_ms << (attempt - 1)));
        }
      }
      if (!served) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        unserved.emplace_back(batch.begin, batch.end);
        cancelled.store(true);
        return;
      }
    }
  };

  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(policy.parallelism), batches.size());
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t n = 0; n < workers; ++n) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  if (protocol_failure) std::rethrow_exception(protocol_failure);
  if (!unserved.empty()) {
    std::sort(unserved.begin(), unserved.end());
    std::string ranges;
    for (const auto& [begin, end] : unserved) {
      if (!ranges.empty()) ranges += ", ";
      ranges += std::to_string(begin) + ".." + std::to_string(end - 1);
    }
    throw ServiceError("endpoint unreachable after " + std::to_string(policy.max_attempts) +
                       " attempts; unserved prompts: " + ranges);
  }
  return results;
}

struct MockSegmentServer::Impl {
  httplib::Server server;
  std::thread thread;
  int port = 0;
};

MockSegmentServer::MockSegmentServer() : impl_(new Impl) {
  impl_->server.Post("/segment", [](const httplib::Request& req, httplib::Response& res) {
    try {
      const auto [frame, prompts] = decode_segment_request(req.body);
      std::vector<SegmentResult> results;
      results.reserve(prompts.size());
      for (const PixelRect& prompt : prompts) {
        BinaryMask mask(frame.width, frame.height, 0);
        const PixelRect clipped = intersect(prompt, frame.bounds());
        for (int y = std::max(0, clipped.top); y < clipped.bottom(); ++y) {
          for (int x = std::max(0, clipped.left); x < clipped.right(); ++x) {
            mask.at(x, y) = 1;
          }
        }
        results.push_back(SegmentResult{rle_encode(mask), 1.0, false});
      }
      res.set_content(encode_segment_response(results), "application/json");
    } catch (const std::exception& e) {
      res.status = 400;
      res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
    }
  });
}

MockSegmentServer::~MockSegmentServer() { stop(); }

int MockSegmentServer::start(int port) {
  if (impl_->thread.joinable()) throw std::logic_error("mock server already running");
  if (port == 0) {
    impl_->port = impl_->server.bind_to_any_port("127.0.0.1");
    if (impl_->port < 0) throw ServiceError("mock server failed to bind a port");
  } else {
    if (!impl_->server.bind_to_port("127.0.0.1", port)) {
      throw ServiceError("mock server failed to bind port " + std::to_string(port));
    }
    impl_->port = port;
  }
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return impl_->port;
}

void MockSegmentServer::stop() {
  if (!impl_->thread.joinable()) return;
  impl_->server.stop();
  impl_->thread.join();
}

std::string MockSegmentServer::endpoint() const {
  return "http://127.0.0.1:" + std::to_string(impl_->port);
}

}  // namespace picbox
