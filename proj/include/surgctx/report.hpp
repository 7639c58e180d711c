#pragma once

// Plain-text tables and CSV for a run's metrics. Output is deterministic:
// rows keep insertion order and numbers use fixed precision.

#include <optional>
#include <string>
#include <vector>

#include "surgctx/eval.hpp"

namespace surgctx {

struct ClassIouRow {
  std::string name;
  ClassIou iou;
};

struct TimingRow {
  int batch_size = 0;
  double deadline_ms = 0.0;
  double segmentation_ms = 0.0;      // wall clock, workers in parallel
  double segmentation_sum_ms = 0.0;  // sum over workers
  double context_ms = 0.0;
  double total_ms = 0.0;
  double deadline_met_fraction = 1.0;
};

struct Metrics {
  std::vector<ClassIouRow> classes;
  std::optional<ContextIou> context;
  std::vector<TimingRow> timing;
};

struct Report {
  std::string text;
  std::string class_csv;
  std::string context_csv;
  std::string timing_csv;
};

Report emit_report(const Metrics& m);

}  // namespace surgctx
