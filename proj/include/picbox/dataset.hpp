#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "picbox/geometry.hpp"
#include "picbox/pic.hpp"

namespace picbox {

// Sequences that exist in the source corpus: dataset id -> camera count.
const std::map<int, int>& corpus_grid();

bool sequence_exists(const SequenceKey& key);

enum class Split { train, valid, test, excluded };

std::string to_string(Split split);
Split split_from_string(const std::string& name);

// Assignment of corpus cells to splits.
struct SplitPlan {
  std::map<SequenceKey, Split> assignment;

  std::optional<Split> lookup(const SequenceKey& key) const;
  // Keys assigned to one split, sorted by (dataset_id, camera_id).
  std::vector<SequenceKey> cells(Split split) const;
  void validate() const;  // every key must name an existing sequence
};

// Throws std::out_of_range when the key is not in the plan.
Split assign_split(const SequenceKey& key, const SplitPlan& plan);

// The fixed plan used for all shipped datasets; dataset 5 carries no
// trajectories and is excluded as the unseen scenario.
SplitPlan canonical_split_plan();

// Plan files are key=value lines, e.g. "d1/c0=train". Blank lines and
// #-comments are ignored; unknown sequences or split names throw.
SplitPlan parse_split_plan(std::istream& in, const std::string& source_name);
SplitPlan load_split_plan(const std::filesystem::path& file);
std::string split_plan_to_text(const SplitPlan& plan);

struct TrajectoryError : std::runtime_error {
  explicit TrajectoryError(const std::string& what) : std::runtime_error(what) {}
};

// Parses a trajectory CSV with header "frame,x,y". Malformed rows throw
// TrajectoryError naming the line. Out-of-order frames are reordered and
// reported through `warn` rather than rejected.
std::vector<TrajectoryPoint> parse_trajectory(std::istream& in, const SequenceKey& sequence,
                                              const std::string& source_name,
                                              const std::function<void(const std::string&)>& warn);
std::vector<TrajectoryPoint> parse_trajectory_file(
    const std::filesystem::path& file, const SequenceKey& sequence,
    const std::function<void(const std::string&)>& warn);

// Keeps the points whose frame index is congruent to the first annotated
// frame modulo the stride, so gaps in the annotation do not shift the phase.
std::vector<TrajectoryPoint> sample_frames(const std::vector<TrajectoryPoint>& points, int stride);

std::string frame_stem(std::int64_t frame_index);  // "frame_000012"

// The frame_%06d.{png,jpg,jpeg} file under dir, or an empty path.
std::filesystem::path find_frame_image(const std::filesystem::path& dir,
                                       std::int64_t frame_index);

// YOLO-style single-class rows: "0 cx cy w h", normalized, six decimals.
std::string emit_detection_label(const PixelRect& rect, int frame_width, int frame_height);
PixelRect parse_detection_label(const std::string& line, int frame_width, int frame_height);

// "0 x1 y1 x2 y2 ...", normalized corner coordinates, six decimals.
std::string emit_segmentation_label(const std::vector<std::pair<double, double>>& polygon,
                                    int frame_width, int frame_height);

enum class LabelKind { detection, segmentation };

struct BuildConfig {
  std::filesystem::path source_root;
  std::filesystem::path output_root;
  SplitPlan plan;
  PicConfig pic;
  int stride = 10;
  LabelKind labels = LabelKind::detection;
  // Optional mask provider for segmentation labels (frame, boxes) -> polygons.
  std::function<std::vector<std::vector<std::pair<double, double>>>(
      const std::filesystem::path&, const std::vector<BBox>&)>
      polygons;
  int jobs = 0;  // 0 = one worker per core
};

struct ManifestEntry {
  std::string image;  // path relative to output root
  std::string label;
  SequenceKey sequence;
  Split split = Split::train;
  std::int64_t frame_index = 0;
  int boxes = 0;
};

// Build record written next to the dataset tree. Serialization is key-ordered
// and timestamp-free so identical inputs give byte-identical manifests.
struct Manifest {
  std::string tool_version;
  PicConfig pic;
  int stride = 10;
  LabelKind labels = LabelKind::detection;
  std::vector<ManifestEntry> entries;
  std::vector<std::string> gaps;  // sampled frames whose image file is missing

  std::map<std::string, int> split_counts() const;
  std::map<std::string, int> sequence_counts() const;
  std::string to_json() const;
};

struct BuildReport {
  Manifest manifest;
  std::vector<std::string> warnings;
};

// Walks source_root/d{n}/c{m} (trajectory *.csv next to frame_%06d images),
// annotates sampled points with pic_box, and writes images/{split} and
// labels/{split} plus manifest.json under output_root. Missing frame files
// become manifest gaps, not failures. Rebuilds are byte-identical.
BuildReport build_dataset(const BuildConfig& config,
                          const std::function<void(const std::string&)>& warn);

}  // namespace picbox
