#include "surgctx/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace surgctx {

namespace {

std::string fixed(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

// Left-aligned first column, right-aligned numbers.
std::string table(const std::string& title, const std::vector<std::string>& header,
                  const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  }
  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& r) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (c > 0) out << "  ";
      const std::string pad(width[c] - r[c].size(), ' ');
      out << (c == 0 ? r[c] + pad : pad + r[c]);
    }
    out << '\n';
  };
  out << title << '\n';
  emit(header);
  std::size_t total = 0;
  for (std::size_t w : width) total += w;
  out << std::string(total + 2 * (width.size() - 1), '-') << '\n';
  for (const auto& r : rows) emit(r);
  return out.str();
}

std::string csv(const std::vector<std::string>& header,
                const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream out;
  auto emit = [&out](const std::vector<std::string>& r) {
    for (std::size_t c = 0; c < r.size(); ++c) out << (c ? "," : "") << r[c];
    out << '\n';
  };
  emit(header);
  for (const auto& r : rows) emit(r);
  return out.str();
}

}  // namespace

Report emit_report(const Metrics& m) {
  Report report;

  const std::vector<std::string> class_header = {"class", "iou", "frames"};
  std::vector<std::vector<std::string>> class_rows;
  for (const ClassIouRow& r : m.classes) {
    class_rows.push_back({r.name, fixed(r.iou.mean, 4), std::to_string(r.iou.frames_counted)});
  }

  const std::vector<std::string> context_header = {"state", "iou"};
  std::vector<std::vector<std::string>> context_rows;
  if (m.context) {
    for (int s = 0; s < kNumStates; ++s) {
      context_rows.push_back({std::string(state_name(s)), fixed(m.context->per_state[s], 4)});
    }
    context_rows.push_back({"mean", fixed(m.context->overall, 4)});
  }

  const std::vector<std::string> timing_header = {
      "batch_size", "deadline_ms", "segmentation_ms", "segmentation_sum_ms",
      "context_ms", "total_ms",    "deadline_met"};
  std::vector<std::vector<std::string>> timing_rows;
  for (const TimingRow& r : m.timing) {
    timing_rows.push_back({std::to_string(r.batch_size), fixed(r.deadline_ms, 1),
                           fixed(r.segmentation_ms, 3), fixed(r.segmentation_sum_ms, 3),
                           fixed(r.context_ms, 3), fixed(r.total_ms, 3),
                           fixed(r.deadline_met_fraction, 3)});
  }

  report.text = table("Segmentation IOU per class", class_header, class_rows) + '\n' +
                table("Context IOU per state", context_header, context_rows) + '\n' +
                table("Batch timing", timing_header, timing_rows);
  report.class_csv = csv(class_header, class_rows);
  report.context_csv = csv(context_header, context_rows);
  report.timing_csv = csv(timing_header, timing_rows);
  return report;
}

}  // namespace surgctx
