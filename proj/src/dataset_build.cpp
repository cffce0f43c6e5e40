#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <thread>

#include "picbox/dataset.hpp"
#include "picbox/io.hpp"
#include "picbox/version.hpp"

namespace picbox {

namespace {

std::vector<std::vector<std::pair<double, double>>> box_corner_polygons(
    const std::vector<BBox>& boxes) {
  std::vector<std::vector<std::pair<double, double>>> polygons;
  polygons.reserve(boxes.size());
  for (const BBox& box : boxes) {
    const double l = box.rect.left;
    const double t = box.rect.top;
    const double r = box.rect.right();
    const double b = box.rect.bottom();
    polygons.push_back({{l, t}, {r, t}, {r, b}, {l, b}});
  }
  return polygons;
}

struct SequenceOutput {
  std::vector<ManifestEntry> entries;
  std::vector<std::string> gaps;
  std::vector<std::string> warnings;
};

SequenceOutput build_sequence(const BuildConfig& config, const SequenceKey& key, Split split) {
  SequenceOutput out;
  const auto warn = [&](const std::string& message) { out.warnings.push_back(message); };

  const std::filesystem::path dir = config.source_root /
                                    ("d" + std::to_string(key.dataset_id)) /
                                    ("c" + std::to_string(key.camera_id));
  if (!std::filesystem::is_directory(dir)) return out;

  std::vector<std::filesystem::path> csv_files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") {
      csv_files.push_back(entry.path());
    }
  }
  std::sort(csv_files.begin(), csv_files.end());
  if (csv_files.empty()) return out;

  std::vector<TrajectoryPoint> points;
  for (const std::filesystem::path& file : csv_files) {
    auto parsed = parse_trajectory_file(file, key, [&](const std::string& message) {
      warn(key.str() + ": " + message);
    });
    points.insert(points.end(), parsed.begin(), parsed.end());
  }
  std::stable_sort(points.begin(), points.end(), [](const auto& a, const auto& b) {
    return a.frame_index < b.frame_index;
  });
  points = sample_frames(points, config.stride);

  const std::string split_name = to_string(split);
  const std::filesystem::path images_dir = config.output_root / "images" / split_name;
  const std::filesystem::path labels_dir = config.output_root / "labels" / split_name;
  bool dirs_ready = false;

  std::size_t i = 0;
  while (i < points.size()) {
    const std::int64_t frame_index = points[i].frame_index;
    std::size_t j = i;
    while (j < points.size() && points[j].frame_index == frame_index) ++j;

    const std::filesystem::path source_image = find_frame_image(dir, frame_index);
    const std::string frame_name = key.str() + "/" + frame_stem(frame_index);
    if (source_image.empty()) {
      out.gaps.push_back(frame_name);
      i = j;
      continue;
    }

    GrayFrame frame;
    try {
      frame = load_gray(source_image);
    } catch (const std::exception& e) {
      warn(frame_name + ": " + e.what());
      out.gaps.push_back(frame_name);
      i = j;
      continue;
    }

    std::vector<BBox> boxes;
    for (std::size_t k = i; k < j; ++k) {
      try {
        boxes.push_back(pic_box(frame, points[k], config.pic).box);
      } catch (const std::exception& e) {
        warn(frame_name + ": " + e.what() + ", point skipped");
      }
    }

    std::string label_text;
    if (config.labels == LabelKind::detection) {
      for (const BBox& box : boxes) {
        label_text += emit_detection_label(box.rect, frame.width, frame.height);
      }
    } else {
      const auto polygons =
          config.polygons ? config.polygons(source_image, boxes) : box_corner_polygons(boxes);
      for (const auto& polygon : polygons) {
        if (polygon.empty()) continue;
        label_text += emit_segmentation_label(polygon, frame.width, frame.height);
      }
    }

    if (!dirs_ready) {
      std::filesystem::create_directories(images_dir);
      std::filesystem::create_directories(labels_dir);
      dirs_ready = true;
    }
    const std::string base = "d" + std::to_string(key.dataset_id) + "_c" +
                             std::to_string(key.camera_id) + "_" + frame_stem(frame_index);
    const std::string image_name = base + source_image.extension().string();
    std::filesystem::copy_file(source_image, images_dir / image_name,
                               std::filesystem::copy_options::overwrite_existing);
    {
      std::ofstream label_file(labels_dir / (base + ".txt"), std::ios::binary);
      label_file << label_text;
    }

    ManifestEntry entry;
    entry.image = "images/" + split_name + "/" + image_name;
    entry.label = "labels/" + split_name + "/" + base + ".txt";
    entry.sequence = key;
    entry.split = split;
    entry.frame_index = frame_index;
    entry.boxes = static_cast<int>(boxes.size());
    out.entries.push_back(std::move(entry));
    i = j;
  }
  return out;
}

}  // namespace

BuildReport build_dataset(const BuildConfig& config,
                          const std::function<void(const std::string&)>& warn) {
  config.pic.validate();
  config.plan.validate();
  if (config.stride < 1) throw std::invalid_argument("stride must be >= 1");
  if (!std::filesystem::is_directory(config.source_root)) {
    throw std::invalid_argument("source root is not a directory: " +
                                config.source_root.string());
  }

  std::vector<std::pair<SequenceKey, Split>> cells;
  for (const auto& [key, split] : config.plan.assignment) {
    if (split != Split::excluded) cells.emplace_back(key, split);
  }

  std::vector<SequenceOutput> outputs(cells.size());
  std::size_t workers = config.jobs > 0 ? static_cast<std::size_t>(config.jobs)
                                        : std::thread::hardware_concurrency();
  if (workers == 0) workers = 1;
  workers = std::min(workers, cells.size());

  std::atomic<std::size_t> cursor{0};
  const auto run = [&] {
    for (std::size_t n = cursor.fetch_add(1); n < cells.size(); n = cursor.fetch_add(1)) {
      try {
        outputs[n] = build_sequence(config, cells[n].first, cells[n].second);
      } catch (const std::exception& e) {
        outputs[n].warnings.push_back(cells[n].first.str() + ": " + e.what());
      }
    }
  };
  if (workers <= 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t n = 0; n < workers; ++n) pool.emplace_back(run);
    for (std::thread& t : pool) t.join();
  }

  BuildReport report;
  report.manifest.tool_version = kVersion;
  report.manifest.pic = config.pic;
  report.manifest.stride = config.stride;
  report.manifest.labels = config.labels;
  for (SequenceOutput& output : outputs) {
    for (const std::string& message : output.warnings) warn(message);
    report.warnings.insert(report.warnings.end(), output.warnings.begin(),
                           output.warnings.end());
    report.manifest.entries.insert(report.manifest.entries.end(),
                                   std::make_move_iterator(output.entries.begin()),
                                   std::make_move_iterator(output.entries.end()));
    report.manifest.gaps.insert(report.manifest.gaps.end(), output.gaps.begin(),
                                output.gaps.end());
  }

  std::filesystem::create_directories(config.output_root);
  std::ofstream manifest_file(config.output_root / "manifest.json", std::ios::binary);
  manifest_file << report.manifest.to_json();
  return report;
}

}  // namespace picbox
