#include "picbox/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "picbox/version.hpp"

namespace picbox {

const std::map<int, int>& corpus_grid() {
  static const std::map<int, int> grid{{1, 4}, {2, 4}, {3, 6}, {4, 7}, {5, 6}};
  return grid;
}

bool sequence_exists(const SequenceKey& key) {
  const auto it = corpus_grid().find(key.dataset_id);
  return it != corpus_grid().end() && key.camera_id >= 0 && key.camera_id < it->second;
}

std::string to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::valid: return "valid";
    case Split::test: return "test";
    case Split::excluded: return "excluded";
  }
  return "unknown";
}

Split split_from_string(const std::string& name) {
  if (name == "train") return Split::train;
  if (name == "valid") return Split::valid;
  if (name == "test") return Split::test;
  if (name == "excluded") return Split::excluded;
  throw std::invalid_argument("unknown split name: " + name);
}

std::optional<Split> SplitPlan::lookup(const SequenceKey& key) const {
  const auto it = assignment.find(key);
  if (it == assignment.end()) return std::nullopt;
  return it->second;
}

std::vector<SequenceKey> SplitPlan::cells(Split split) const {
  std::vector<SequenceKey> out;
  for (const auto& [key, value] : assignment) {
    if (value == split) out.push_back(key);
  }
  return out;
}

void SplitPlan::validate() const {
  for (const auto& [key, value] : assignment) {
    if (!sequence_exists(key)) {
      throw std::invalid_argument("split plan names unknown sequence " + key.str());
    }
  }
}

Split assign_split(const SequenceKey& key, const SplitPlan& plan) {
  const auto split = plan.lookup(key);
  if (!split) throw std::out_of_range("no split assigned for sequence " + key.str());
  return *split;
}

SplitPlan canonical_split_plan() {
  SplitPlan plan;
  const auto set = [&](int dataset, int camera, Split split) {
    plan.assignment[SequenceKey{dataset, camera}] = split;
  };
  set(1, 0, Split::train);
  set(1, 1, Split::valid);
  set(1, 2, Split::train);
  set(1, 3, Split::test);
  set(2, 0, Split::test);
  set(2, 1, Split::train);
  set(2, 2, Split::train);
  set(2, 3, Split::valid);
  set(3, 0, Split::train);
  set(3, 1, Split::train);
  set(3, 2, Split::valid);
  set(3, 3, Split::train);
  set(3, 4, Split::test);
  set(3, 5, Split::train);
  set(4, 0, Split::test);
  set(4, 1, Split::train);
  set(4, 2, Split::train);
  set(4, 3, Split::train);
  set(4, 4, Split::valid);
  set(4, 5, Split::train);
  set(4, 6, Split::test);
  for (int camera = 0; camera < corpus_grid().at(5); ++camera) {
    set(5, camera, Split::excluded);
  }
  return plan;
}

namespace {

std::string trim(const std::string& text) {
  const auto begin = text.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = text.find_last_not_of(" \t\r\n");
  return text.substr(begin, end - begin + 1);
}

SequenceKey parse_sequence_key(const std::string& text) {
  int dataset = 0;
  int camera = 0;
  char tail = 0;
  if (std::sscanf(text.c_str(), "d%d/c%d%c", &dataset, &camera, &tail) != 2) {
    throw std::invalid_argument("malformed sequence key: " + text);
  }
  return SequenceKey{dataset, camera};
}

}  // namespace

SplitPlan parse_split_plan(std::istream& in, const std::string& source_name) {
  SplitPlan plan;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = trim(line);
    if (text.empty() || text[0] == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(source_name + " line " + std::to_string(line_no) +
                                  ": expected key=value");
    }
    const SequenceKey key = parse_sequence_key(trim(text.substr(0, eq)));
    if (!sequence_exists(key)) {
      throw std::invalid_argument(source_name + " line " + std::to_string(line_no) +
                                  ": unknown sequence " + key.str());
    }
    if (plan.assignment.count(key) != 0) {
      throw std::invalid_argument(source_name + " line " + std::to_string(line_no) +
                                  ": duplicate sequence " + key.str());
    }
    plan.assignment[key] = split_from_string(trim(text.substr(eq + 1)));
  }
  return plan;
}

SplitPlan load_split_plan(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::invalid_argument("cannot open split plan " + file.string());
  return parse_split_plan(in, file.filename().string());
}

std::string split_plan_to_text(const SplitPlan& plan) {
  std::string out;
  for (const auto& [key, split] : plan.assignment) {
    out += key.str() + "=" + to_string(split) + "\n";
  }
  return out;
}

namespace {

double parse_number(const std::string& field, const std::string& context) {
  const std::string text = trim(field);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw TrajectoryError(context + ": malformed number '" + field + "'");
  }
  return value;
}

}  // namespace

std::vector<TrajectoryPoint> parse_trajectory(std::istream& in, const SequenceKey& sequence,
                                              const std::string& source_name,
                                              const std::function<void(const std::string&)>& warn) {
  std::string line;
  if (!std::getline(in, line)) {
    throw TrajectoryError(source_name + ": empty file, expected header 'frame,x,y'");
  }
  if (trim(line) != "frame,x,y") {
    throw TrajectoryError(source_name + " line 1: expected header 'frame,x,y'");
  }

  std::vector<TrajectoryPoint> points;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = trim(line);
    if (text.empty()) continue;
    const std::string context = source_name + " line " + std::to_string(line_no);

    const auto first = text.find(',');
    const auto second = first == std::string::npos ? std::string::npos : text.find(',', first + 1);
    if (second == std::string::npos || text.find(',', second + 1) != std::string::npos) {
      throw TrajectoryError(context + ": expected three comma-separated fields");
    }
    const double frame = parse_number(text.substr(0, first), context);
    const auto frame_index = static_cast<std::int64_t>(frame);
    if (frame < 0 || static_cast<double>(frame_index) != frame) {
      throw TrajectoryError(context + ": frame index must be a nonnegative integer");
    }
    TrajectoryPoint point;
    point.frame_index = frame_index;
    point.x = parse_number(text.substr(first + 1, second - first - 1), context);
    point.y = parse_number(text.substr(second + 1), context);
    point.sequence = sequence;
    points.push_back(point);
  }

  bool sorted = true;
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i].frame_index < points[i - 1].frame_index) {
      sorted = false;
      break;
    }
  }
  if (!sorted) {
    warn(source_name + ": frame indices out of order, reordering");
    std::stable_sort(points.begin(), points.end(), [](const auto& a, const auto& b) {
      return a.frame_index < b.frame_index;
    });
  }
  return points;
}

std::vector<TrajectoryPoint> parse_trajectory_file(
    const std::filesystem::path& file, const SequenceKey& sequence,
    const std::function<void(const std::string&)>& warn) {
  std::ifstream in(file);
  if (!in) throw TrajectoryError("cannot open trajectory file " + file.string());
  return parse_trajectory(in, sequence, file.filename().string(), warn);
}

std::vector<TrajectoryPoint> sample_frames(const std::vector<TrajectoryPoint>& points,
                                           int stride) {
  if (stride < 1) throw std::invalid_argument("stride must be >= 1");
  if (stride == 1 || points.empty()) return points;
  const std::int64_t anchor = points.front().frame_index;
  std::vector<TrajectoryPoint> kept;
  for (const TrajectoryPoint& point : points) {
    if ((point.frame_index - anchor) % stride == 0) kept.push_back(point);
  }
  return kept;
}

std::string frame_stem(std::int64_t frame_index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%06lld", static_cast<long long>(frame_index));
  return buf;
}

std::filesystem::path find_frame_image(const std::filesystem::path& dir,
                                       std::int64_t frame_index) {
  for (const char* ext : {".png", ".jpg", ".jpeg"}) {
    std::filesystem::path candidate = dir / (frame_stem(frame_index) + ext);
    if (std::filesystem::exists(candidate)) return candidate;
  }
  return {};
}

std::string emit_detection_label(const PixelRect& rect, int frame_width, int frame_height) {
  if (rect.width < 1 || rect.height < 1) throw std::invalid_argument("box must be non-empty");
  if (frame_width < 1 || frame_height < 1) {
    throw std::invalid_argument("frame dimensions must be positive");
  }
  const double cx = (rect.left + rect.width / 2.0) / frame_width;
  const double cy = (rect.top + rect.height / 2.0) / frame_height;
  const double w = static_cast<double>(rect.width) / frame_width;
  const double h = static_cast<double>(rect.height) / frame_height;
  char line[96];
  std::snprintf(line, sizeof(line), "0 %.6f %.6f %.6f %.6f\n", cx, cy, w, h);
  return line;
}

PixelRect parse_detection_label(const std::string& line, int frame_width, int frame_height) {
  std::istringstream in(line);
  int cls = -1;
  double cx = 0.0, cy = 0.0, w = 0.0, h = 0.0;
  if (!(in >> cls >> cx >> cy >> w >> h)) {
    throw std::invalid_argument("malformed detection label: " + line);
  }
  if (cls != 0) throw std::invalid_argument("unexpected class id in label: " + line);
  const int width = std::max(1, round_half_up(w * frame_width));
  const int height = std::max(1, round_half_up(h * frame_height));
  return PixelRect{round_half_up(cx * frame_width - width / 2.0),
                   round_half_up(cy * frame_height - height / 2.0), width, height};
}

std::string emit_segmentation_label(const std::vector<std::pair<double, double>>& polygon,
                                    int frame_width, int frame_height) {
  if (polygon.size() < 3) throw std::invalid_argument("polygon needs at least 3 vertices");
  std::string out = "0";
  char field[40];
  for (const auto& [x, y] : polygon) {
    std::snprintf(field, sizeof(field), " %.6f %.6f", x / frame_width, y / frame_height);
    out += field;
  }
  out += "\n";
  return out;
}

std::map<std::string, int> Manifest::split_counts() const {
  std::map<std::string, int> counts;
  for (const ManifestEntry& entry : entries) ++counts[to_string(entry.split)];
  return counts;
}

std::map<std::string, int> Manifest::sequence_counts() const {
  std::map<std::string, int> counts;
  for (const ManifestEntry& entry : entries) ++counts[entry.sequence.str()];
  return counts;
}

std::string Manifest::to_json() const {
  nlohmann::ordered_json doc;
  doc["tool"] = "picbox";
  doc["version"] = tool_version;
  doc["config"] = {{"w0", pic.w0},
                   {"h0", pic.h0},
                   {"delta", pic.delta},
                   {"epsilon", pic.epsilon},
                   {"max_iters", pic.max_iters},
                   {"return_expanded", pic.return_expanded},
                   {"stride", stride},
                   {"labels", labels == LabelKind::detection ? "detection" : "segmentation"}};
  doc["splits"] = split_counts();
  doc["sequences"] = sequence_counts();
  doc["gaps"] = gaps;
  doc["entries"] = nlohmann::ordered_json::array();
  for (const ManifestEntry& entry : entries) {
    doc["entries"].push_back({{"image", entry.image},
                              {"label", entry.label},
                              {"sequence", entry.sequence.str()},
                              {"split", to_string(entry.split)},
                              {"frame", entry.frame_index},
                              {"boxes", entry.boxes}});
  }
  return doc.dump(2) + "\n";
}

}  // namespace picbox
