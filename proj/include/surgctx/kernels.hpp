#pragma once

// Space-time memory readout kernels.
//
//   affinity:            S[j][i] = -||kQ_i - kM_j||^2   (memory j, query i)
//   normalize_affinity:  W[j][i] = exp(S[j][i]) / sum_n exp(S[n][i])
//   readout:             vQ[c][i] = sum_j vM[c][j] * W[j][i]
//
// The top-level functions are OpenMP-parallel over memory rows / query
// column blocks. Each output element is computed by exactly one thread in a
// fixed order, so results do not depend on the thread count.
// `kernels::serial` holds the plain single-threaded reference used by tests
// and the benchmark.

#include "surgctx/feature_map.hpp"

namespace surgctx::kernels {

// Expanded form -(|kQ_i|^2 - 2 kQ_i.kM_j + |kM_j|^2). Throws
// DimensionMismatchError if the channel counts differ.
Matrix affinity(const FeatureMap& query_key, const FeatureMap& memory_key);

// Column-wise softmax over the memory axis with max subtraction.
void normalize_affinity_inplace(Matrix& s);
Matrix normalize_affinity(Matrix s);

// Throws DimensionMismatchError unless weights.rows() == memory_value.positions().
FeatureMap readout(const FeatureMap& memory_value, const Matrix& weights);

namespace serial {

Matrix affinity(const FeatureMap& query_key, const FeatureMap& memory_key);
Matrix normalize_affinity(Matrix s);
FeatureMap readout(const FeatureMap& memory_value, const Matrix& weights);

}  // namespace serial

}  // namespace surgctx::kernels
