#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "picbox/baselines.hpp"
#include "picbox/dataset.hpp"
#include "picbox/metrics.hpp"
#include "picbox/pic.hpp"
#include "picbox/segmenter.hpp"
#include "picbox/version.hpp"

namespace py = pybind11;
using namespace picbox;

namespace {

using Uint8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

GrayFrame frame_from_array(const Uint8Array& array) {
  if (array.ndim() != 2) throw std::invalid_argument("frame must be a 2-D uint8 array (h, w)");
  const int height = static_cast<int>(array.shape(0));
  const int width = static_cast<int>(array.shape(1));
  GrayFrame frame(width, height);
  std::memcpy(frame.data.data(), array.data(), frame.data.size());
  return frame;
}

BinaryMask mask_from_array(const Uint8Array& array) {
  if (array.ndim() != 2) throw std::invalid_argument("mask must be a 2-D array (h, w)");
  BinaryMask mask(static_cast<int>(array.shape(1)), static_cast<int>(array.shape(0)));
  std::memcpy(mask.data.data(), array.data(), mask.data.size());
  return mask;
}

py::array_t<std::uint8_t> array_from_mask(const BinaryMask& mask) {
  py::array_t<std::uint8_t> array({mask.height, mask.width});
  std::memcpy(array.mutable_data(), mask.data.data(), mask.data.size());
  return array;
}

PixelRect rect_from(const std::array<int, 4>& ltwh) {
  return PixelRect{ltwh[0], ltwh[1], ltwh[2], ltwh[3]};
}

py::tuple rect_tuple(const PixelRect& rect) {
  return py::make_tuple(rect.left, rect.top, rect.width, rect.height);
}

py::dict trace_dict(const PicResult& result) {
  py::dict out;
  out["box"] = rect_tuple(result.box.rect);
  out["halt"] = to_string(result.trace.halt);
  out["means"] = result.trace.means;
  py::list boxes;
  for (const PixelRect& box : result.trace.boxes) boxes.append(rect_tuple(box));
  out["boxes"] = boxes;
  return out;
}

MaskRLE rle_from(const std::vector<std::int64_t>& counts, int width, int height) {
  MaskRLE rle;
  rle.width = width;
  rle.height = height;
  rle.counts = counts;
  rle.validate();
  return rle;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bounding boxes and masks from per-frame trajectory points";
  m.attr("__version__") = kVersion;

  py::class_<PicConfig>(m, "PicConfig")
      .def(py::init([](int w0, int h0, int delta, double epsilon, int max_iters,
                       bool return_expanded) {
             PicConfig config;
             config.w0 = w0;
             config.h0 = h0;
             config.delta = delta;
             config.epsilon = epsilon;
             config.max_iters = max_iters;
             config.return_expanded = return_expanded;
             config.validate();
             return config;
           }),
           py::arg("w0") = 8, py::arg("h0") = 8, py::arg("delta") = 5,
           py::arg("epsilon") = 4.0, py::arg("max_iters") = 64,
           py::arg("return_expanded") = false)
      .def_readwrite("w0", &PicConfig::w0)
      .def_readwrite("h0", &PicConfig::h0)
      .def_readwrite("delta", &PicConfig::delta)
      .def_readwrite("epsilon", &PicConfig::epsilon)
      .def_readwrite("max_iters", &PicConfig::max_iters)
      .def_readwrite("return_expanded", &PicConfig::return_expanded);

  m.def(
      "pic_box",
      [](const Uint8Array& frame, double x, double y, const PicConfig& config) {
        return trace_dict(pic_box(frame_from_array(frame), TrajectoryPoint{x, y, 0, {}}, config));
      },
      py::arg("frame"), py::arg("x"), py::arg("y"), py::arg("config") = PicConfig{},
      "Expand a patch around (x, y) until its mean intensity stabilizes; returns "
      "a dict with the chosen box, halt reason, and the expansion trace.");

  m.def(
      "init_box",
      [](double x, double y, const PicConfig& config) {
        return rect_tuple(init_box(TrajectoryPoint{x, y, 0, {}}, config));
      },
      py::arg("x"), py::arg("y"), py::arg("config") = PicConfig{});

  m.def(
      "expand",
      [](const std::array<int, 4>& box, const PicConfig& config) {
        return rect_tuple(expand(rect_from(box), config));
      },
      py::arg("box"), py::arg("config") = PicConfig{});

  m.def(
      "iou",
      [](const std::array<int, 4>& a, const std::array<int, 4>& b) {
        return iou(rect_from(a), rect_from(b));
      },
      py::arg("a"), py::arg("b"));

  m.def(
      "fixed_box",
      [](const Uint8Array& frame, double x, double y, int size) {
        FixedConfig config{size, size};
        return rect_tuple(
            fixed_box(TrajectoryPoint{x, y, 0, {}}, frame_from_array(frame), config).rect);
      },
      py::arg("frame"), py::arg("x"), py::arg("y"), py::arg("size") = 50);

  m.def(
      "threshold_box",
      [](const Uint8Array& frame, double x, double y, int threshold,
         const std::string& polarity, int connectivity, int search_radius, int fallback_size) {
        ThresholdConfig config;
        config.threshold = threshold;
        config.polarity = polarity_from_string(polarity);
        config.connectivity = connectivity;
        config.search_radius = search_radius;
        config.fallback_size = fallback_size;
        const ThresholdOutcome out =
            threshold_box(frame_from_array(frame), TrajectoryPoint{x, y, 0, {}}, config);
        py::dict result;
        result["box"] = rect_tuple(out.box.rect);
        result["fallback"] = out.fallback;
        return result;
      },
      py::arg("frame"), py::arg("x"), py::arg("y"), py::arg("threshold") = 150,
      py::arg("polarity") = "foreground_below", py::arg("connectivity") = 8,
      py::arg("search_radius") = 50, py::arg("fallback_size") = 50);

  m.def(
      "rle_encode",
      [](const Uint8Array& mask) {
        const MaskRLE rle = rle_encode(mask_from_array(mask));
        py::dict out;
        out["width"] = rle.width;
        out["height"] = rle.height;
        out["counts"] = rle.counts;
        return out;
      },
      py::arg("mask"), "Column-major run-length counts, starting with background.");

  m.def(
      "rle_decode",
      [](const std::vector<std::int64_t>& counts, int width, int height) {
        return array_from_mask(rle_decode(rle_from(counts, width, height)));
      },
      py::arg("counts"), py::arg("width"), py::arg("height"));

  m.def(
      "bbox_from_mask",
      [](const std::vector<std::int64_t>& counts, int width, int height) {
        return rect_tuple(bbox_from_mask(rle_from(counts, width, height)).rect);
      },
      py::arg("counts"), py::arg("width"), py::arg("height"));

  m.def(
      "mask_to_polygon",
      [](const Uint8Array& mask) { return mask_to_polygon(mask_from_array(mask)); },
      py::arg("mask"),
      "Clockwise outer contour of the largest foreground component, as pixel-corner "
      "(x, y) pairs.");

  m.def(
      "emit_detection_label",
      [](const std::array<int, 4>& box, int width, int height) {
        return emit_detection_label(rect_from(box), width, height);
      },
      py::arg("box"), py::arg("width"), py::arg("height"));

  m.def(
      "parse_detection_label",
      [](const std::string& line, int width, int height) {
        return rect_tuple(parse_detection_label(line, width, height));
      },
      py::arg("line"), py::arg("width"), py::arg("height"));

  m.def(
      "emit_segmentation_label",
      [](const std::vector<std::pair<double, double>>& polygon, int width, int height) {
        return emit_segmentation_label(polygon, width, height);
      },
      py::arg("polygon"), py::arg("width"), py::arg("height"));

  m.def("canonical_split_plan", [] {
    py::dict out;
    for (const auto& [key, split] : canonical_split_plan().assignment) {
      out[py::str(key.str())] = to_string(split);
    }
    return out;
  });

  m.def(
      "assign_split",
      [](int dataset_id, int camera_id) {
        return to_string(assign_split(SequenceKey{dataset_id, camera_id}, canonical_split_plan()));
      },
      py::arg("dataset_id"), py::arg("camera_id"));

  m.def(
      "sample_frames",
      [](const std::vector<std::int64_t>& frames, int stride) {
        std::vector<TrajectoryPoint> points;
        points.reserve(frames.size());
        for (std::int64_t frame : frames) points.push_back({0.0, 0.0, frame, {}});
        std::vector<std::int64_t> kept;
        for (const TrajectoryPoint& point : sample_frames(points, stride)) {
          kept.push_back(point.frame_index);
        }
        return kept;
      },
      py::arg("frames"), py::arg("stride"),
      "Frame indices congruent to the first one modulo stride.");

  py::register_exception<OutsideFrameError>(m, "OutsideFrameError", PyExc_ValueError);
}
