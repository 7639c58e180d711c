#include "surgctx/feature_map.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "surgctx/error.hpp"

namespace surgctx {

namespace {

constexpr char kMagic[8] = {'S', 'T', 'F', 'M', 'A', 'P', '0', '1'};
constexpr std::size_t kHeaderBytes = 16;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[at + i]) << (8 * i);
  return v;
}

}  // namespace

Matrix::Matrix(int rows, int cols)
    : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, 0.0) {
  if (rows < 0 || cols < 0) throw DimensionMismatchError("Matrix: negative dimension");
}

Matrix::Matrix(int rows, int cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (rows < 0 || cols < 0 || data_.size() != static_cast<std::size_t>(rows) * cols) {
    throw DimensionMismatchError("Matrix: data size does not match " + std::to_string(rows) +
                                 "x" + std::to_string(cols));
  }
}

FeatureMap::FeatureMap(int channels, int positions)
    : data_(channels, positions), grid_width_(positions) {
  if (channels <= 0 || positions <= 0) {
    throw DimensionMismatchError("FeatureMap: channels and positions must be positive");
  }
}

FeatureMap::FeatureMap(int channels, int positions, std::vector<double> data)
    : data_(channels, positions, std::move(data)), grid_width_(positions) {
  if (channels <= 0 || positions <= 0) {
    throw DimensionMismatchError("FeatureMap: channels and positions must be positive");
  }
  for (double v : data_.data()) {
    if (!std::isfinite(v)) throw DataError("FeatureMap: non-finite entry");
  }
}

FeatureMap FeatureMap::on_grid(int channels, int grid_height, int grid_width) {
  FeatureMap fm(channels, grid_height * grid_width);
  fm.set_grid(grid_height, grid_width);
  return fm;
}

void FeatureMap::set_grid(int grid_height, int grid_width) {
  if (grid_height <= 0 || grid_width <= 0 || grid_height * grid_width != positions()) {
    throw DimensionMismatchError("FeatureMap: grid " + std::to_string(grid_height) + "x" +
                                 std::to_string(grid_width) + " does not cover " +
                                 std::to_string(positions()) + " positions");
  }
  grid_height_ = grid_height;
  grid_width_ = grid_width;
}

FeatureMap concat_positions(std::span<const FeatureMap> maps) {
  if (maps.empty()) throw DimensionMismatchError("concat_positions: nothing to concatenate");
  const int channels = maps.front().channels();
  int total = 0;
  for (const FeatureMap& m : maps) {
    if (m.channels() != channels) {
      throw DimensionMismatchError("concat_positions: channel mismatch " +
                                   std::to_string(m.channels()) + " vs " +
                                   std::to_string(channels));
    }
    total += m.positions();
  }
  FeatureMap out(channels, total);
  for (int c = 0; c < channels; ++c) {
    auto dst = out.channel(c).begin();
    for (const FeatureMap& m : maps) dst = std::copy(m.channel(c).begin(), m.channel(c).end(), dst);
  }
  return out;
}

FeatureMap concat_channels(const FeatureMap& a, const FeatureMap& b) {
  if (a.positions() != b.positions()) {
    throw DimensionMismatchError("concat_channels: position mismatch");
  }
  FeatureMap out(a.channels() + b.channels(), a.positions());
  for (int c = 0; c < a.channels(); ++c) {
    std::copy(a.channel(c).begin(), a.channel(c).end(), out.channel(c).begin());
  }
  for (int c = 0; c < b.channels(); ++c) {
    std::copy(b.channel(c).begin(), b.channel(c).end(), out.channel(a.channels() + c).begin());
  }
  out.set_grid(a.grid_height(), a.grid_width());
  return out;
}

std::vector<std::uint8_t> serialize_feature_map(const FeatureMap& fm) {
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + 4 * fm.matrix().data().size());
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_u32(out, static_cast<std::uint32_t>(fm.channels()));
  put_u32(out, static_cast<std::uint32_t>(fm.positions()));
  for (double v : fm.matrix().data()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return out;
}

FeatureMap deserialize_feature_map(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw DataError("feature map: bad magic or truncated header");
  }
  const std::uint32_t channels = get_u32(bytes, 8);
  const std::uint32_t positions = get_u32(bytes, 12);
  const std::size_t count = static_cast<std::size_t>(channels) * positions;
  if (channels == 0 || positions == 0 || bytes.size() != kHeaderBytes + 4 * count) {
    throw DataError("feature map: payload size does not match header");
  }
  std::vector<double> data(count);
  for (std::size_t i = 0; i < count; ++i) {
    data[i] = std::bit_cast<float>(get_u32(bytes, kHeaderBytes + 4 * i));
  }
  return FeatureMap(static_cast<int>(channels), static_cast<int>(positions), std::move(data));
}

void write_feature_map(const std::filesystem::path& path, const FeatureMap& fm) {
  const auto bytes = serialize_feature_map(fm);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

FeatureMap read_feature_map(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_feature_map(bytes);
}

}  // namespace surgctx
