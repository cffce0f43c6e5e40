#include <algorithm>
#include <atomic>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "picbox/baselines.hpp"
#include "picbox/dataset.hpp"
#include "picbox/io.hpp"
#include "picbox/metrics.hpp"
#include "picbox/pic.hpp"
#include "picbox/segmenter.hpp"
#include "picbox/synth.hpp"
#include "picbox/version.hpp"

namespace {

using namespace picbox;

constexpr int kExitOk = 0;
constexpr int kExitInputError = 1;
constexpr int kExitItemFailures = 2;
constexpr int kExitServiceError = 3;

void warn(const std::string& message) { std::cerr << "warning: " << message << "\n"; }

std::string read_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open " + file.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::filesystem::path& file, const std::string& content) {
  std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot write " + file.string());
  out << content;
}

// Trajectory points grouped by frame, preserving frame order.
std::vector<std::pair<std::int64_t, std::vector<TrajectoryPoint>>> group_by_frame(
    const std::vector<TrajectoryPoint>& points) {
  std::vector<std::pair<std::int64_t, std::vector<TrajectoryPoint>>> groups;
  for (const TrajectoryPoint& point : points) {
    if (groups.empty() || groups.back().first != point.frame_index) {
      groups.push_back({point.frame_index, {}});
    }
    groups.back().second.push_back(point);
  }
  return groups;
}

std::vector<PixelRect> parse_label_file(const std::filesystem::path& file, int width,
                                        int height) {
  std::vector<PixelRect> boxes;
  std::ifstream in(file);
  if (!in) throw std::invalid_argument("cannot open label file " + file.string());
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    boxes.push_back(parse_detection_label(line, width, height));
  }
  return boxes;
}

struct PicFlags {
  PicConfig config;

  void attach(CLI::App* cmd) {
    cmd->add_option("--w0", config.w0, "Initial patch size in pixels (square seed)")
        ->envname("PICBOX_W0");
    cmd->add_option("--delta", config.delta, "Expansion step in pixels")->envname("PICBOX_DELTA");
    cmd->add_option("--epsilon", config.epsilon, "Convergence threshold on the mean delta")
        ->envname("PICBOX_EPSILON");
    cmd->add_option("--max-iters", config.max_iters, "Expansion step limit")
        ->envname("PICBOX_MAX_ITERS");
    cmd->add_flag("--return-expanded", config.return_expanded,
                  "Return the box after the converging expansion instead of the one before it");
  }

  PicConfig resolve() const {
    PicConfig out = config;
    out.h0 = out.w0;
    out.validate();
    return out;
  }
};

struct AnnotateArgs {
  std::string frames_dir;
  std::string trajectory;
  std::string out_dir;
  PicFlags pic;
  bool dump_traces = false;
  int jobs = 0;
};

int run_annotate(const AnnotateArgs& args) {
  const PicConfig config = args.pic.resolve();
  const auto points =
      parse_trajectory_file(args.trajectory, SequenceKey{0, 0}, [](const std::string& m) {
        warn(m);
      });
  const auto groups = group_by_frame(points);

  struct FrameOutput {
    std::string label_text;
    nlohmann::ordered_json traces = nlohmann::ordered_json::array();
    std::vector<std::string> errors;
  };
  std::vector<FrameOutput> outputs(groups.size());

  std::atomic<std::size_t> cursor{0};
  const auto run = [&] {
    for (std::size_t n = cursor.fetch_add(1); n < groups.size(); n = cursor.fetch_add(1)) {
      const auto& [frame_index, frame_points] = groups[n];
      FrameOutput& out = outputs[n];
      const std::filesystem::path image = find_frame_image(args.frames_dir, frame_index);
      if (image.empty()) {
        out.errors.push_back(frame_stem(frame_index) + ": frame image not found");
        continue;
      }
      GrayFrame frame;
      try {
        frame = load_gray(image);
      } catch (const std::exception& e) {
        out.errors.push_back(e.what());
        continue;
      }
      for (const TrajectoryPoint& point : frame_points) {
        try {
          const PicResult result = pic_box(frame, point, config);
          out.label_text += emit_detection_label(result.box.rect, frame.width, frame.height);
          if (args.dump_traces) {
            nlohmann::ordered_json trace;
            trace["point"] = {point.x, point.y};
            trace["halt"] = to_string(result.trace.halt);
            trace["means"] = result.trace.means;
            trace["boxes"] = nlohmann::ordered_json::array();
            for (const PixelRect& box : result.trace.boxes) {
              trace["boxes"].push_back({box.left, box.top, box.width, box.height});
            }
            out.traces.push_back(std::move(trace));
          }
        } catch (const std::exception& e) {
          out.errors.push_back(frame_stem(frame_index) + ": " + e.what());
        }
      }
    }
  };
  std::size_t workers =
      args.jobs > 0 ? static_cast<std::size_t>(args.jobs) : std::thread::hardware_concurrency();
  workers = std::max<std::size_t>(1, std::min(workers, groups.size()));
  if (workers <= 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t n = 0; n < workers; ++n) pool.emplace_back(run);
    for (std::thread& t : pool) t.join();
  }

  int failures = 0;
  nlohmann::ordered_json traces_doc;
  for (std::size_t n = 0; n < groups.size(); ++n) {
    const std::string stem = frame_stem(groups[n].first);
    for (const std::string& error : outputs[n].errors) {
      std::cerr << "error: " << error << "\n";
      ++failures;
    }
    write_file(std::filesystem::path(args.out_dir) / "labels" / (stem + ".txt"),
               outputs[n].label_text);
    if (args.dump_traces) traces_doc[stem] = std::move(outputs[n].traces);
  }
  if (args.dump_traces) {
    write_file(std::filesystem::path(args.out_dir) / "traces.json", traces_doc.dump(2) + "\n");
  }
  std::cout << "annotated " << groups.size() << " frames";
  if (failures > 0) std::cout << ", " << failures << " item failures";
  std::cout << "\n";
  return failures > 0 ? kExitItemFailures : kExitOk;
}

struct EvaluateArgs {
  std::string frames_dir;
  std::string trajectory;
  std::string truth_dir;
  std::string out_dir;
  std::string methods = "pic,fixed,threshold";
  PicFlags pic;
  int threshold = 150;
  std::string polarity = "foreground_below";
  int fixed_size = 50;
};

int run_evaluate(const EvaluateArgs& args) {
  const PicConfig pic_config = args.pic.resolve();
  FixedConfig fixed_config{args.fixed_size, args.fixed_size};
  fixed_config.validate();
  ThresholdConfig threshold_config;
  threshold_config.threshold = args.threshold;
  threshold_config.polarity = polarity_from_string(args.polarity);
  threshold_config.validate();

  std::vector<NamedExtractor> methods;
  std::istringstream list(args.methods);
  std::string name;
  while (std::getline(list, name, ',')) {
    if (name == "pic") {
      methods.push_back({"pic", [pic_config](const GrayFrame& frame, const TrajectoryPoint& p) {
                           return pic_box(frame, p, pic_config).box;
                         }});
    } else if (name == "fixed") {
      methods.push_back({"fixed", [fixed_config](const GrayFrame& frame,
                                                 const TrajectoryPoint& p) {
                           return fixed_box(p, frame, fixed_config);
                         }});
    } else if (name == "threshold") {
      methods.push_back({"threshold", [threshold_config](const GrayFrame& frame,
                                                         const TrajectoryPoint& p) {
                           return threshold_box(frame, p, threshold_config).box;
                         }});
    } else {
      throw std::invalid_argument("unknown method: " + name);
    }
  }
  if (methods.empty()) throw std::invalid_argument("no methods selected");

  const auto points =
      parse_trajectory_file(args.trajectory, SequenceKey{0, 0}, [](const std::string& m) {
        warn(m);
      });
  const auto groups = group_by_frame(points);

  // Frames and truth labels are loaded and aligned up front, before any
  // timing runs.
  std::vector<GrayFrame> frames;
  std::vector<EvalItem> items;
  frames.reserve(groups.size());
  for (const auto& [frame_index, frame_points] : groups) {
    const std::string stem = frame_stem(frame_index);
    const std::filesystem::path image = find_frame_image(args.frames_dir, frame_index);
    if (image.empty()) throw std::invalid_argument(stem + ": frame image not found");
    frames.push_back(load_gray(image));
    const GrayFrame& frame = frames.back();
    const std::filesystem::path truth_file =
        std::filesystem::path(args.truth_dir) / (stem + ".txt");
    const std::vector<PixelRect> truth = parse_label_file(truth_file, frame.width, frame.height);
    if (truth.size() != frame_points.size()) {
      throw std::invalid_argument(stem + ": " + std::to_string(frame_points.size()) +
                                  " trajectory points but " + std::to_string(truth.size()) +
                                  " truth boxes");
    }
    for (std::size_t k = 0; k < frame_points.size(); ++k) {
      EvalItem item;
      item.id = stem + (frame_points.size() > 1 ? ":" + std::to_string(k) : "");
      item.point = frame_points[k];
      item.truth = BBox{truth[k], BoxSource::human};
      items.push_back(item);
    }
  }
  // frames is stable now; wire the pointers.
  std::size_t item_index = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (std::size_t k = 0; k < groups[g].second.size(); ++k) {
      items[item_index++].frame = &frames[g];
    }
  }

  const EvalOutcome outcome = evaluate(items, methods);
  std::cout << format_summary_table(outcome.summaries);
  write_file(std::filesystem::path(args.out_dir) / "summary.json",
             summaries_to_json(outcome.summaries));
  write_file(std::filesystem::path(args.out_dir) / "records.json",
             records_to_json(outcome.records));

  const bool failures = std::any_of(outcome.records.begin(), outcome.records.end(),
                                    [](const EvalRecord& r) { return r.failed; });
  return failures ? kExitItemFailures : kExitOk;
}

struct BuildArgs {
  std::string root;
  std::string out_dir;
  std::string plan = "canonical";
  int stride = 10;
  std::string labels = "detection";
  PicFlags pic;
  int jobs = 0;
};

int run_build(const BuildArgs& args) {
  BuildConfig config;
  config.source_root = args.root;
  config.output_root = args.out_dir;
  config.plan = args.plan == "canonical" ? canonical_split_plan() : load_split_plan(args.plan);
  config.pic = args.pic.resolve();
  config.stride = args.stride;
  if (args.labels == "detection") {
    config.labels = LabelKind::detection;
  } else if (args.labels == "segmentation") {
    config.labels = LabelKind::segmentation;
  } else {
    throw std::invalid_argument("labels must be 'detection' or 'segmentation'");
  }
  config.jobs = args.jobs;

  const BuildReport report = build_dataset(config, warn);
  std::cout << "built " << report.manifest.entries.size() << " images";
  for (const auto& [split, count] : report.manifest.split_counts()) {
    std::cout << " " << split << "=" << count;
  }
  if (!report.manifest.gaps.empty()) {
    std::cout << " (" << report.manifest.gaps.size() << " gaps)";
  }
  std::cout << "\n";
  return kExitOk;
}

struct RenderArgs {
  std::string frames_dir;
  std::string labels_dir;
  std::string out_dir;
  std::string traces;
};

int run_render(const RenderArgs& args) {
  nlohmann::json traces_doc;
  if (!args.traces.empty()) traces_doc = nlohmann::json::parse(read_file(args.traces));

  std::vector<std::filesystem::path> images;
  for (const auto& entry : std::filesystem::directory_iterator(args.frames_dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = entry.path().extension().string();
    if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") images.push_back(entry.path());
  }
  std::sort(images.begin(), images.end());
  if (images.empty()) throw std::invalid_argument("no frame images under " + args.frames_dir);

  std::filesystem::create_directories(args.out_dir);
  for (const std::filesystem::path& image : images) {
    RgbFrame frame = load_rgb(image);
    const std::string stem = image.stem().string();

    if (traces_doc.contains(stem)) {
      for (const auto& trace : traces_doc.at(stem)) {
        for (const auto& box : trace.at("boxes")) {
          draw_rect_outline(frame,
                            PixelRect{box.at(0).get<int>(), box.at(1).get<int>(),
                                      box.at(2).get<int>(), box.at(3).get<int>()},
                            {80, 144, 255});
        }
      }
    }
    const std::filesystem::path label_file =
        std::filesystem::path(args.labels_dir) / (stem + ".txt");
    if (std::filesystem::exists(label_file)) {
      for (const PixelRect& box : parse_label_file(label_file, frame.width, frame.height)) {
        draw_rect_outline(frame, box, {255, 48, 48});
      }
    } else {
      warn(stem + ": no label file, frame copied unannotated");
    }
    save_png(std::filesystem::path(args.out_dir) / (stem + ".png"), frame);
  }
  std::cout << "rendered " << images.size() << " frames\n";
  return kExitOk;
}

struct MasksArgs {
  std::string frames_dir;
  std::string boxes_dir;
  std::string out_dir;
  std::string endpoint;
  bool mock = false;
  int jobs = 4;
  int batch_size = 8;
};

int run_masks(const MasksArgs& args) {
  if (args.endpoint.empty() && !args.mock) {
    throw std::invalid_argument("either --endpoint or --mock is required");
  }

  std::vector<std::filesystem::path> images;
  for (const auto& entry : std::filesystem::directory_iterator(args.frames_dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = entry.path().extension().string();
    if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") images.push_back(entry.path());
  }
  std::sort(images.begin(), images.end());
  if (images.empty()) throw std::invalid_argument("no frame images under " + args.frames_dir);

  MockSegmentServer mock_server;
  std::string endpoint = args.endpoint;
  if (args.mock) {
    mock_server.start();
    endpoint = mock_server.endpoint();
  }
  SegmentPolicy policy;
  policy.parallelism = std::max(1, args.jobs);
  policy.batch_size = std::max(1, args.batch_size);

  // All frames are segmented before any label is written, so a service
  // failure leaves no partial output behind.
  std::vector<std::pair<std::string, std::string>> labels;
  int skipped = 0;
  for (const std::filesystem::path& image : images) {
    const GrayFrame frame = load_gray(image);
    const std::string stem = image.stem().string();
    const std::filesystem::path box_file =
        std::filesystem::path(args.boxes_dir) / (stem + ".txt");
    std::vector<BBox> boxes;
    if (std::filesystem::exists(box_file)) {
      for (const PixelRect& rect : parse_label_file(box_file, frame.width, frame.height)) {
        boxes.push_back(BBox{clip_rect(rect, frame), BoxSource::pic});
      }
    } else {
      warn(stem + ": no box file, empty label emitted");
    }

    std::string label_text;
    for (const SegmentResult& result : segment_boxes(endpoint, frame, boxes, policy)) {
      const auto polygon = mask_to_polygon(rle_decode(result.mask));
      if (polygon.size() < 3) {
        warn(stem + ": mask with no foreground, instance skipped");
        ++skipped;
        continue;
      }
      label_text += emit_segmentation_label(polygon, frame.width, frame.height);
    }
    labels.emplace_back(stem, std::move(label_text));
  }

  for (const auto& [stem, text] : labels) {
    write_file(std::filesystem::path(args.out_dir) / (stem + ".txt"), text);
  }
  std::cout << "wrote " << labels.size() << " segmentation label files\n";
  return skipped > 0 ? kExitItemFailures : kExitOk;
}

struct SynthArgs {
  std::string spec_file;
  std::string out_dir;
  std::string prefix = "frame_";
};

int run_synth(const SynthArgs& args) {
  const std::vector<SceneSpec> scenes = scenes_from_json(read_file(args.spec_file));
  if (scenes.empty()) throw std::invalid_argument("scene spec file is empty");
  std::filesystem::create_directories(args.out_dir);

  nlohmann::ordered_json truth_doc = nlohmann::ordered_json::array();
  for (std::size_t n = 0; n < scenes.size(); ++n) {
    const RenderResult rendered = render(scenes[n]);
    char suffix[16];
    std::snprintf(suffix, sizeof(suffix), "%06zu", n);
    const std::string name = args.prefix + suffix + ".png";
    save_png(std::filesystem::path(args.out_dir) / name, rendered.frame);
    nlohmann::ordered_json record;
    record["image"] = name;
    record["boxes"] = nlohmann::ordered_json::array();
    for (const BBox& box : rendered.truth) {
      record["boxes"].push_back({box.rect.left, box.rect.top, box.rect.width, box.rect.height});
    }
    truth_doc.push_back(std::move(record));
  }
  write_file(std::filesystem::path(args.out_dir) / "truth.json", truth_doc.dump(2) + "\n");
  std::cout << "rendered " << scenes.size() << " scenes\n";
  return kExitOk;
}

int run_serve_mock(int port) {
  MockSegmentServer server;
  server.start(port);
  std::cout << "mock segmentation server listening on " << server.endpoint() << std::endl;
  while (true) std::this_thread::sleep_for(std::chrono::seconds(60));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trajectory-point to bounding-box and mask annotation toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  AnnotateArgs annotate_args;
  CLI::App* annotate = app.add_subcommand(
      "annotate", "Derive detection labels from a trajectory file and frame images");
  annotate->add_option("--frames", annotate_args.frames_dir, "Directory of frame_%06d images")
      ->required();
  annotate->add_option("--trajectory", annotate_args.trajectory, "Trajectory CSV (frame,x,y)")
      ->required();
  annotate->add_option("--out", annotate_args.out_dir, "Output directory")
      ->envname("PICBOX_OUT")
      ->required();
  annotate_args.pic.attach(annotate);
  annotate->add_flag("--dump-traces", annotate_args.dump_traces,
                     "Write per-point expansion traces to traces.json");
  annotate->add_option("--jobs", annotate_args.jobs, "Worker count (0 = all cores)")
      ->envname("PICBOX_JOBS");

  EvaluateArgs evaluate_args;
  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "Score extraction methods against truth boxes (mean IoU and runtime)");
  evaluate->add_option("--frames", evaluate_args.frames_dir, "Directory of frame_%06d images")
      ->required();
  evaluate->add_option("--trajectory", evaluate_args.trajectory, "Trajectory CSV (frame,x,y)")
      ->required();
  evaluate->add_option("--truth", evaluate_args.truth_dir,
                       "Directory of truth label files (frame_%06d.txt)")
      ->required();
  evaluate->add_option("--out", evaluate_args.out_dir, "Output directory")
      ->envname("PICBOX_OUT")
      ->required();
  evaluate->add_option("--methods", evaluate_args.methods,
                       "Comma list from: pic, fixed, threshold");
  evaluate_args.pic.attach(evaluate);
  evaluate->add_option("--threshold", evaluate_args.threshold, "Binarization threshold")
      ->envname("PICBOX_THRESHOLD");
  evaluate->add_option("--polarity", evaluate_args.polarity,
                       "foreground_below or foreground_above")
      ->envname("PICBOX_POLARITY");
  evaluate->add_option("--fixed-size", evaluate_args.fixed_size, "Fixed baseline box size")
      ->envname("PICBOX_FIXED_SIZE");

  BuildArgs build_args;
  CLI::App* build = app.add_subcommand(
      "build", "Assemble a dataset tree from a d{n}/c{m} source corpus");
  build->add_option("--root", build_args.root, "Source corpus root")->required();
  build->add_option("--out", build_args.out_dir, "Output dataset root")
      ->envname("PICBOX_OUT")
      ->required();
  build->add_option("--plan", build_args.plan, "Split plan file, or 'canonical'")
      ->envname("PICBOX_PLAN");
  build->add_option("--stride", build_args.stride, "Keep every stride-th annotated frame")
      ->envname("PICBOX_STRIDE");
  build->add_option("--labels", build_args.labels, "Label kind: detection or segmentation");
  build_args.pic.attach(build);
  build->add_option("--jobs", build_args.jobs, "Worker count (0 = all cores)")
      ->envname("PICBOX_JOBS");

  RenderArgs render_args;
  CLI::App* render_cmd = app.add_subcommand(
      "render", "Draw label boxes (and optional expansion traces) onto frames");
  render_cmd->add_option("--frames", render_args.frames_dir, "Directory of frame images")
      ->required();
  render_cmd->add_option("--labels", render_args.labels_dir, "Directory of detection labels")
      ->required();
  render_cmd->add_option("--out", render_args.out_dir, "Output directory")
      ->envname("PICBOX_OUT")
      ->required();
  render_cmd->add_option("--traces", render_args.traces, "traces.json from annotate");

  MasksArgs masks_args;
  CLI::App* masks = app.add_subcommand(
      "masks", "Turn detection boxes into polygon labels via a segmentation service");
  masks->add_option("--frames", masks_args.frames_dir, "Directory of frame images")->required();
  masks->add_option("--boxes", masks_args.boxes_dir, "Directory of detection label files")
      ->required();
  masks->add_option("--out", masks_args.out_dir, "Output directory")
      ->envname("PICBOX_OUT")
      ->required();
  masks->add_option("--endpoint", masks_args.endpoint, "Segmentation service URL")
      ->envname("PICBOX_ENDPOINT");
  masks->add_flag("--mock", masks_args.mock, "Serve prompts from the bundled mock segmenter");
  masks->add_option("--jobs", masks_args.jobs, "In-flight request bound")
      ->envname("PICBOX_JOBS");
  masks->add_option("--batch-size", masks_args.batch_size, "Prompts per request");

  SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand(
      "synth", "Render synthetic scenes with known truth boxes from a JSON spec");
  synth->add_option("--spec", synth_args.spec_file, "Scene spec JSON (object or array)")
      ->required();
  synth->add_option("--out", synth_args.out_dir, "Output directory")
      ->envname("PICBOX_OUT")
      ->required();
  synth->add_option("--prefix", synth_args.prefix, "Output image name prefix");

  int serve_port = 0;
  CLI::App* serve = app.add_subcommand("serve-mock", "Run the mock segmentation server");
  serve->add_option("--port", serve_port, "Port to bind (0 = pick a free port)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInputError;
  }

  try {
    if (annotate->parsed()) return run_annotate(annotate_args);
    if (evaluate->parsed()) return run_evaluate(evaluate_args);
    if (build->parsed()) return run_build(build_args);
    if (render_cmd->parsed()) return run_render(render_args);
    if (masks->parsed()) return run_masks(masks_args);
    if (synth->parsed()) return run_synth(synth_args);
    if (serve->parsed()) return run_serve_mock(serve_port);
  } catch (const ServiceError& e) {
    std::cerr << "service error: " << e.what() << "\n";
    return kExitServiceError;
  } catch (const ProtocolError& e) {
    std::cerr << "protocol error: " << e.what() << "\n";
    return kExitServiceError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitOk;
}
