#pragma once

#include <filesystem>

#include "picbox/imaging.hpp"

namespace picbox {

struct ImageIoError : std::runtime_error {
  explicit ImageIoError(const std::string& what) : std::runtime_error(what) {}
};

// PNG/JPEG readers; color inputs are reduced with the same luma weights as
// to_gray(). Failures throw ImageIoError naming the file.
GrayFrame load_gray(const std::filesystem::path& file);
RgbFrame load_rgb(const std::filesystem::path& file);

void save_png(const std::filesystem::path& file, const GrayFrame& frame);
void save_png(const std::filesystem::path& file, const RgbFrame& frame);

}  // namespace picbox
