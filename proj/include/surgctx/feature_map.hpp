#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace surgctx {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols);
  Matrix(int rows, int cols, std::vector<double> data);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  std::span<double> row(int r) { return {data_.data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)}; }
  std::span<const double> row(int r) const { return {data_.data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)}; }
  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

// channels x positions feature matrix. Positions flatten an optional
// grid_height x grid_width spatial grid (row-major); maps without spatial
// meaning (e.g. concatenated memory) use a 1 x positions grid.
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(int channels, int positions);
  // Throws DataError on non-finite entries.
  FeatureMap(int channels, int positions, std::vector<double> data);

  static FeatureMap on_grid(int channels, int grid_height, int grid_width);

  int channels() const { return data_.rows(); }
  int positions() const { return data_.cols(); }
  int grid_height() const { return grid_height_; }
  int grid_width() const { return grid_width_; }
  // Reinterprets positions as a grid; throws DimensionMismatchError if the
  // product does not equal positions().
  void set_grid(int grid_height, int grid_width);

  double& operator()(int c, int p) { return data_(c, p); }
  double operator()(int c, int p) const { return data_(c, p); }
  std::span<double> channel(int c) { return data_.row(c); }
  std::span<const double> channel(int c) const { return data_.row(c); }
  const Matrix& matrix() const { return data_; }

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;

 private:
  Matrix data_;
  int grid_height_ = 1;
  int grid_width_ = 0;
};

// Stacks maps along the position axis (memory concatenation).
FeatureMap concat_positions(std::span<const FeatureMap> maps);
// Stacks maps along the channel axis; position counts must match.
FeatureMap concat_channels(const FeatureMap& a, const FeatureMap& b);

// Interchange container: 16-byte header (8-byte magic "STFMAP01", uint32
// channels, uint32 positions; little-endian) then channel-major float32.
std::vector<std::uint8_t> serialize_feature_map(const FeatureMap& fm);
FeatureMap deserialize_feature_map(std::span<const std::uint8_t> bytes);
void write_feature_map(const std::filesystem::path& path, const FeatureMap& fm);
FeatureMap read_feature_map(const std::filesystem::path& path);

}  // namespace surgctx
