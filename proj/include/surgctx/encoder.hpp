#pragma once

// Pluggable key/value encoders and mask decoder. Trained CNN backbones are
// outside this library; ToyEncoder is a deterministic stand-in and
// ExternalFeatureEncoder injects key features computed elsewhere.

#include <filesystem>

#include "surgctx/feature_map.hpp"
#include "surgctx/mask.hpp"

namespace surgctx {

struct Frame {
  int index = 0;
  Image image;
};

class Encoder {
 public:
  virtual ~Encoder() = default;

  virtual FeatureMap encode_key(const Frame& frame) const = 0;
  virtual FeatureMap encode_value(const Frame& frame, const BinaryMask& mask) const = 0;
  // Output is width x height; width/height are stride x the feature grid.
  virtual BinaryMask decode(const FeatureMap& value, int width, int height) const = 0;
  virtual int stride() const = 0;
};

// Mean mask occupancy per stride x stride cell, as a 1-channel grid map.
FeatureMap pooled_occupancy(const BinaryMask& mask, int stride);

// Nearest-neighbour upsample of the value map's last channel, set where > 0.5.
BinaryMask decode_occupancy(const FeatureMap& value, int stride, int width, int height);

// key   = (intensity_weight * gray, position_weight * x / W, position_weight * y / H),
//         average-pooled per cell (gray in [0, 1], x/y at cell centres)
// value = key channels + pooled mask occupancy
// Frame dimensions must be multiples of the stride.
class ToyEncoder final : public Encoder {
 public:
  struct Options {
    int stride = 8;
    double intensity_weight = 40.0;
    double position_weight = 4.0;
  };

  ToyEncoder() : ToyEncoder(Options{}) {}
  explicit ToyEncoder(Options options);

  FeatureMap encode_key(const Frame& frame) const override;
  FeatureMap encode_value(const Frame& frame, const BinaryMask& mask) const override;
  BinaryMask decode(const FeatureMap& value, int width, int height) const override;
  int stride() const override { return options_.stride; }
  const Options& options() const { return options_; }

 private:
  Options options_;
};

// Keys are read from `<directory>/<index, 5 digits>.fmap`; the value appends
// pooled mask occupancy to the key, and decoding matches ToyEncoder.
class ExternalFeatureEncoder final : public Encoder {
 public:
  ExternalFeatureEncoder(std::filesystem::path directory, int stride);

  FeatureMap encode_key(const Frame& frame) const override;
  FeatureMap encode_value(const Frame& frame, const BinaryMask& mask) const override;
  BinaryMask decode(const FeatureMap& value, int width, int height) const override;
  int stride() const override { return stride_; }

  static std::filesystem::path key_path(const std::filesystem::path& directory, int index);

 private:
  std::filesystem::path directory_;
  int stride_;
};

}  // namespace surgctx
