#include "picbox/io.hpp"

#include <opencv2/imgcodecs.hpp>

namespace picbox {

namespace {

cv::Mat read_8bit(const std::filesystem::path& file) {
  cv::Mat image = cv::imread(file.string(), cv::IMREAD_UNCHANGED);
  if (image.empty()) throw ImageIoError("cannot read image " + file.string());
  if (image.depth() != CV_8U) {
    throw ImageIoError("unsupported bit depth in " + file.string());
  }
  return image;
}

}  // namespace

GrayFrame load_gray(const std::filesystem::path& file) {
  const cv::Mat image = read_8bit(file);
  GrayFrame frame(image.cols, image.rows);
  if (image.channels() == 1) {
    for (int y = 0; y < image.rows; ++y) {
      const std::uint8_t* row = image.ptr<std::uint8_t>(y);
      std::copy(row, row + image.cols, frame.data.begin() + static_cast<std::size_t>(y) * image.cols);
    }
    return frame;
  }
  if (image.channels() != 3 && image.channels() != 4) {
    throw ImageIoError("unsupported channel count in " + file.string());
  }
  const int channels = image.channels();
  for (int y = 0; y < image.rows; ++y) {
    const std::uint8_t* row = image.ptr<std::uint8_t>(y);
    for (int x = 0; x < image.cols; ++x) {
      const std::uint8_t* px = row + static_cast<std::size_t>(x) * channels;  // BGR order
      frame.at(x, y) = luma601(px[2], px[1], px[0]);
    }
  }
  return frame;
}

RgbFrame load_rgb(const std::filesystem::path& file) {
  const cv::Mat image = read_8bit(file);
  RgbFrame frame;
  frame.width = image.cols;
  frame.height = image.rows;
  frame.data.resize(static_cast<std::size_t>(image.cols) * image.rows * 3);
  const int channels = image.channels();
  if (channels != 1 && channels != 3 && channels != 4) {
    throw ImageIoError("unsupported channel count in " + file.string());
  }
  for (int y = 0; y < image.rows; ++y) {
    const std::uint8_t* row = image.ptr<std::uint8_t>(y);
    for (int x = 0; x < image.cols; ++x) {
      const std::uint8_t* px = row + static_cast<std::size_t>(x) * channels;
      std::uint8_t* dst = frame.pixel(x, y);
      if (channels == 1) {
        dst[0] = dst[1] = dst[2] = px[0];
      } else {
        dst[0] = px[2];
        dst[1] = px[1];
        dst[2] = px[0];
      }
    }
  }
  return frame;
}

void save_png(const std::filesystem::path& file, const GrayFrame& frame) {
  const cv::Mat image(frame.height, frame.width, CV_8UC1,
                      const_cast<std::uint8_t*>(frame.data.data()));
  if (!cv::imwrite(file.string(), image)) {
    throw ImageIoError("cannot write image " + file.string());
  }
}

void save_png(const std::filesystem::path& file, const RgbFrame& frame) {
  cv::Mat bgr(frame.height, frame.width, CV_8UC3);
  for (int y = 0; y < frame.height; ++y) {
    std::uint8_t* row = bgr.ptr<std::uint8_t>(y);
    for (int x = 0; x < frame.width; ++x) {
      const std::uint8_t* px = frame.pixel(x, y);
      row[x * 3 + 0] = px[2];
      row[x * 3 + 1] = px[1];
      row[x * 3 + 2] = px[0];
    }
  }
  if (!cv::imwrite(file.string(), bgr)) {
    throw ImageIoError("cannot write image " + file.string());
  }
}

}  // namespace picbox
