#include "picbox/geometry.hpp"

namespace picbox {

const char* to_string(BoxSource source) {
  switch (source) {
    case BoxSource::pic: return "pic";
    case BoxSource::fixed: return "fixed";
    case BoxSource::threshold: return "threshold";
    case BoxSource::human: return "human";
    case BoxSource::segmenter: return "segmenter";
  }
  return "unknown";
}

BoxSource box_source_from_string(const std::string& name) {
  if (name == "pic") return BoxSource::pic;
  if (name == "fixed") return BoxSource::fixed;
  if (name == "threshold") return BoxSource::threshold;
  if (name == "human") return BoxSource::human;
  if (name == "segmenter") return BoxSource::segmenter;
  throw std::invalid_argument("unknown box source: " + name);
}

}  // namespace picbox
