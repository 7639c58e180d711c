#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "surgctx/error.hpp"
#include "surgctx/kernels.hpp"

namespace surgctx::kernels::serial {

Matrix affinity(const FeatureMap& query_key, const FeatureMap& memory_key) {
  if (query_key.channels() != memory_key.channels()) {
    throw DimensionMismatchError("affinity: query has " + std::to_string(query_key.channels()) +
                                 " channels, memory has " + std::to_string(memory_key.channels()));
  }
  const int channels = query_key.channels();
  const int nq = query_key.positions();
  const int nm = memory_key.positions();
  Matrix s(nm, nq);
  for (int j = 0; j < nm; ++j) {
    double mm = 0.0;
    for (int c = 0; c < channels; ++c) mm += memory_key(c, j) * memory_key(c, j);
    for (int i = 0; i < nq; ++i) {
      double qq = 0.0;
      double qm = 0.0;
      for (int c = 0; c < channels; ++c) {
        qq += query_key(c, i) * query_key(c, i);
        qm += query_key(c, i) * memory_key(c, j);
      }
      s(j, i) = -(qq - 2.0 * qm + mm);
    }
  }
  return s;
}

Matrix normalize_affinity(Matrix s) {
  for (int i = 0; i < s.cols(); ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < s.rows(); ++j) mx = std::max(mx, s(j, i));
    double sum = 0.0;
    for (int j = 0; j < s.rows(); ++j) {
      s(j, i) = std::exp(s(j, i) - mx);
      sum += s(j, i);
    }
    for (int j = 0; j < s.rows(); ++j) s(j, i) /= sum;
  }
  return s;
}

FeatureMap readout(const FeatureMap& memory_value, const Matrix& weights) {
  if (weights.rows() != memory_value.positions()) {
    throw DimensionMismatchError("readout: memory value has " +
                                 std::to_string(memory_value.positions()) +
                                 " positions, weights have " + std::to_string(weights.rows()) +
                                 " rows");
  }
  FeatureMap out(memory_value.channels(), weights.cols());
  for (int c = 0; c < memory_value.channels(); ++c) {
    for (int i = 0; i < weights.cols(); ++i) {
      double acc = 0.0;
      for (int j = 0; j < weights.rows(); ++j) acc += memory_value(c, j) * weights(j, i);
      out(c, i) = acc;
    }
  }
  return out;
}

}  // namespace surgctx::kernels::serial
