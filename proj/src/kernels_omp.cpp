#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "surgctx/error.hpp"
#include "surgctx/kernels.hpp"

namespace surgctx::kernels {

namespace {

// Query columns handled together so the strided column walks stay in cache.
constexpr int kColumnBlock = 64;

int num_blocks(int cols) { return (cols + kColumnBlock - 1) / kColumnBlock; }

// exp() rounds to +0 below this; skipping the call avoids libm's slow
// underflow path without changing any result.
constexpr double kExpUnderflow = -745.2;

inline double exp_or_zero(double x) { return x < kExpUnderflow ? 0.0 : std::exp(x); }

}  // namespace

Matrix affinity(const FeatureMap& query_key, const FeatureMap& memory_key) {
  if (query_key.channels() != memory_key.channels()) {
    throw DimensionMismatchError("affinity: query has " + std::to_string(query_key.channels()) +
                                 " channels, memory has " + std::to_string(memory_key.channels()));
  }
  const int channels = query_key.channels();
  const int nq = query_key.positions();
  const int nm = memory_key.positions();

  std::vector<double> q_norm(nq, 0.0);
  for (int c = 0; c < channels; ++c) {
    const auto q = query_key.channel(c);
    for (int i = 0; i < nq; ++i) q_norm[i] += q[i] * q[i];
  }

  Matrix s(nm, nq);
#pragma omp parallel for schedule(static)
  for (int j = 0; j < nm; ++j) {
    double m_norm = 0.0;
    for (int c = 0; c < channels; ++c) m_norm += memory_key(c, j) * memory_key(c, j);
    double* row = s.row(j).data();
    for (int i = 0; i < nq; ++i) row[i] = 0.0;
    for (int c = 0; c < channels; ++c) {
      const double m = memory_key(c, j);
      const double* q = query_key.channel(c).data();
#pragma omp simd
      for (int i = 0; i < nq; ++i) row[i] += q[i] * m;
    }
#pragma omp simd
    for (int i = 0; i < nq; ++i) row[i] = -(q_norm[i] - 2.0 * row[i] + m_norm);
  }
  return s;
}

void normalize_affinity_inplace(Matrix& s) {
  const int nm = s.rows();
  const int nq = s.cols();
  const int blocks = num_blocks(nq);
#pragma omp parallel for schedule(static)
  for (int b = 0; b < blocks; ++b) {
    const int i0 = b * kColumnBlock;
    const int i1 = std::min(nq, i0 + kColumnBlock);
    double mx[kColumnBlock];
    double sum[kColumnBlock];
    std::fill(mx, mx + (i1 - i0), -std::numeric_limits<double>::infinity());
    std::fill(sum, sum + (i1 - i0), 0.0);
    for (int j = 0; j < nm; ++j) {
      const double* row = s.row(j).data();
      for (int i = i0; i < i1; ++i) mx[i - i0] = std::max(mx[i - i0], row[i]);
    }
    for (int j = 0; j < nm; ++j) {
      double* row = s.row(j).data();
      for (int i = i0; i < i1; ++i) {
        row[i] = exp_or_zero(row[i] - mx[i - i0]);
        sum[i - i0] += row[i];
      }
    }
    for (int j = 0; j < nm; ++j) {
      double* row = s.row(j).data();
      for (int i = i0; i < i1; ++i) row[i] /= sum[i - i0];
    }
  }
}

Matrix normalize_affinity(Matrix s) {
  normalize_affinity_inplace(s);
  return s;
}

FeatureMap readout(const FeatureMap& memory_value, const Matrix& weights) {
  if (weights.rows() != memory_value.positions()) {
    throw DimensionMismatchError("readout: memory value has " +
                                 std::to_string(memory_value.positions()) +
                                 " positions, weights have " + std::to_string(weights.rows()) +
                                 " rows");
  }
  const int channels = memory_value.channels();
  const int nm = weights.rows();
  const int nq = weights.cols();
  FeatureMap out(channels, nq);
  const int blocks = num_blocks(nq);
#pragma omp parallel for schedule(static)
  for (int b = 0; b < blocks; ++b) {
    const int i0 = b * kColumnBlock;
    const int i1 = std::min(nq, i0 + kColumnBlock);
    for (int c = 0; c < channels; ++c) {
      double* dst = out.channel(c).data();
      const double* v = memory_value.channel(c).data();
      for (int j = 0; j < nm; ++j) {
        const double vj = v[j];
        const double* w = weights.row(j).data();
#pragma omp simd
        for (int i = i0; i < i1; ++i) dst[i] += vj * w[i];
      }
    }
  }
  return out;
}

}  // namespace surgctx::kernels
