#include "surgctx/mask.hpp"

#include <algorithm>
#include <string>

#include "surgctx/error.hpp"

namespace surgctx {

namespace {

std::size_t checked_area(int width, int height, const char* what) {
  if (width <= 0 || height <= 0) {
    throw DimensionMismatchError(std::string(what) + ": width and height must be positive, got " +
                                 std::to_string(width) + "x" + std::to_string(height));
  }
  return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
}

}  // namespace

BinaryMask::BinaryMask(int width, int height)
    : width_(width), height_(height), bits_(checked_area(width, height, "BinaryMask"), 0) {}

BinaryMask::BinaryMask(int width, int height, std::vector<std::uint8_t> bits)
    : width_(width), height_(height), bits_(std::move(bits)) {
  if (bits_.size() != checked_area(width, height, "BinaryMask")) {
    throw DimensionMismatchError("BinaryMask: bit count " + std::to_string(bits_.size()) +
                                 " does not match " + std::to_string(width) + "x" +
                                 std::to_string(height));
  }
  for (auto& b : bits_) b = b ? 1 : 0;
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

LabelFrame::LabelFrame(int width, int height)
    : width_(width), height_(height), labels_(checked_area(width, height, "LabelFrame"), 0) {}

LabelFrame::LabelFrame(int width, int height, std::vector<std::uint8_t> labels)
    : width_(width), height_(height), labels_(std::move(labels)) {
  if (labels_.size() != checked_area(width, height, "LabelFrame")) {
    throw DimensionMismatchError("LabelFrame: label count does not match dimensions");
  }
  for (std::uint8_t l : labels_) {
    if (l > kNumClasses) throw DataError("LabelFrame: label " + std::to_string(l) + " >= 7");
  }
}

void LabelFrame::set(int x, int y, std::uint8_t label) {
  if (label > kNumClasses) throw DataError("LabelFrame: label " + std::to_string(label) + " >= 7");
  labels_[static_cast<std::size_t>(y) * width_ + x] = label;
}

Image::Image(int width, int height, std::uint8_t fill)
    : width_(width), height_(height), pixels_(checked_area(width, height, "Image"), fill) {}

Image::Image(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (pixels_.size() != checked_area(width, height, "Image")) {
    throw DimensionMismatchError("Image: pixel count does not match dimensions");
  }
}

}  // namespace surgctx
