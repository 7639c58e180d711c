#include "surgctx/encoder.hpp"

#include <cstdio>
#include <string>

#include "surgctx/error.hpp"

namespace surgctx {

namespace {

void require_divisible(int width, int height, int stride) {
  if (stride <= 0 || width % stride != 0 || height % stride != 0) {
    throw DimensionMismatchError("frame " + std::to_string(width) + "x" + std::to_string(height) +
                                 " is not a multiple of stride " + std::to_string(stride));
  }
}

}  // namespace

FeatureMap pooled_occupancy(const BinaryMask& mask, int stride) {
  require_divisible(mask.width(), mask.height(), stride);
  const int gh = mask.height() / stride;
  const int gw = mask.width() / stride;
  FeatureMap out = FeatureMap::on_grid(1, gh, gw);
  const double inv = 1.0 / (stride * stride);
  for (int gy = 0; gy < gh; ++gy) {
    for (int gx = 0; gx < gw; ++gx) {
      int on = 0;
      for (int y = gy * stride; y < (gy + 1) * stride; ++y) {
        for (int x = gx * stride; x < (gx + 1) * stride; ++x) on += mask.at(x, y) ? 1 : 0;
      }
      out(0, gy * gw + gx) = on * inv;
    }
  }
  return out;
}

BinaryMask decode_occupancy(const FeatureMap& value, int stride, int width, int height) {
  require_divisible(width, height, stride);
  const int gh = height / stride;
  const int gw = width / stride;
  if (value.positions() != gh * gw) {
    throw DimensionMismatchError("decode: " + std::to_string(value.positions()) +
                                 " positions cannot cover a " + std::to_string(gw) + "x" +
                                 std::to_string(gh) + " grid");
  }
  const int occ = value.channels() - 1;
  BinaryMask out(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      out.set(x, y, value(occ, (y / stride) * gw + x / stride) > 0.5);
    }
  }
  return out;
}

ToyEncoder::ToyEncoder(Options options) : options_(options) {
  if (options_.stride <= 0) throw std::invalid_argument("ToyEncoder: stride must be positive");
}

FeatureMap ToyEncoder::encode_key(const Frame& frame) const {
  const Image& img = frame.image;
  const int s = options_.stride;
  require_divisible(img.width(), img.height(), s);
  const int gh = img.height() / s;
  const int gw = img.width() / s;
  FeatureMap key = FeatureMap::on_grid(3, gh, gw);
  const double inv = 1.0 / (255.0 * s * s);
  for (int gy = 0; gy < gh; ++gy) {
    for (int gx = 0; gx < gw; ++gx) {
      int sum = 0;
      for (int y = gy * s; y < (gy + 1) * s; ++y) {
        for (int x = gx * s; x < (gx + 1) * s; ++x) sum += img.at(x, y);
      }
      const int p = gy * gw + gx;
      key(0, p) = options_.intensity_weight * sum * inv;
      key(1, p) = options_.position_weight * (gx + 0.5) * s / img.width();
      key(2, p) = options_.position_weight * (gy + 0.5) * s / img.height();
    }
  }
  return key;
}

FeatureMap ToyEncoder::encode_value(const Frame& frame, const BinaryMask& mask) const {
  if (mask.width() != frame.image.width() || mask.height() != frame.image.height()) {
    throw DimensionMismatchError("encode_value: mask and image dimensions differ");
  }
  return concat_channels(encode_key(frame), pooled_occupancy(mask, options_.stride));
}

BinaryMask ToyEncoder::decode(const FeatureMap& value, int width, int height) const {
  return decode_occupancy(value, options_.stride, width, height);
}

ExternalFeatureEncoder::ExternalFeatureEncoder(std::filesystem::path directory, int stride)
    : directory_(std::move(directory)), stride_(stride) {
  if (stride_ <= 0) throw std::invalid_argument("ExternalFeatureEncoder: stride must be positive");
}

std::filesystem::path ExternalFeatureEncoder::key_path(const std::filesystem::path& directory,
                                                       int index) {
  char name[32];
  std::snprintf(name, sizeof(name), "%05d.fmap", index);
  return directory / name;
}

FeatureMap ExternalFeatureEncoder::encode_key(const Frame& frame) const {
  FeatureMap key = read_feature_map(key_path(directory_, frame.index));
  require_divisible(frame.image.width(), frame.image.height(), stride_);
  key.set_grid(frame.image.height() / stride_, frame.image.width() / stride_);
  return key;
}

FeatureMap ExternalFeatureEncoder::encode_value(const Frame& frame, const BinaryMask& mask) const {
  return concat_channels(encode_key(frame), pooled_occupancy(mask, stride_));
}

BinaryMask ExternalFeatureEncoder::decode(const FeatureMap& value, int width, int height) const {
  return decode_occupancy(value, stride_, width, height);
}

}  // namespace surgctx
