#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "surgctx/object_class.hpp"

namespace surgctx {

// Row-major boolean raster, one byte per pixel (0 or 1).
class BinaryMask {
 public:
  BinaryMask(int width, int height);
  BinaryMask(int width, int height, std::vector<std::uint8_t> bits);

  int width() const { return width_; }
  int height() const { return height_; }
  bool at(int x, int y) const { return bits_[index(x, y)] != 0; }
  void set(int x, int y, bool on) { bits_[index(x, y)] = on ? 1 : 0; }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  std::span<const std::uint8_t> bits() const { return bits_; }
  std::span<std::uint8_t> bits() { return bits_; }

  std::size_t count() const;
  bool none() const { return count() == 0; }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_;
  int height_;
  std::vector<std::uint8_t> bits_;
};

// Per-pixel class labels: 0 background, label_of(class) otherwise.
class LabelFrame {
 public:
  LabelFrame(int width, int height);
  LabelFrame(int width, int height, std::vector<std::uint8_t> labels);

  int width() const { return width_; }
  int height() const { return height_; }
  std::uint8_t at(int x, int y) const { return labels_[static_cast<std::size_t>(y) * width_ + x]; }
  void set(int x, int y, std::uint8_t label);
  std::span<const std::uint8_t> labels() const { return labels_; }

  friend bool operator==(const LabelFrame&, const LabelFrame&) = default;

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> labels_;
};

// 8-bit grayscale frame.
class Image {
 public:
  Image(int width, int height, std::uint8_t fill = 0);
  Image(int width, int height, std::vector<std::uint8_t> pixels);

  int width() const { return width_; }
  int height() const { return height_; }
  std::uint8_t at(int x, int y) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
  void set(int x, int y, std::uint8_t v) { pixels_[static_cast<std::size_t>(y) * width_ + x] = v; }
  std::span<const std::uint8_t> pixels() const { return pixels_; }
  std::span<std::uint8_t> pixels() { return pixels_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> pixels_;
};

struct ClassMask {
  ObjectClass cls;
  BinaryMask mask;
};

}  // namespace surgctx
