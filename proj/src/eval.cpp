#include "surgctx/eval.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "surgctx/error.hpp"
#include "surgctx/mask_ops.hpp"

namespace surgctx {

Timeline::Timeline(int frame_step, double video_rate) : frame_step_(frame_step), video_rate_(video_rate) {
  if (frame_step <= 0) throw DataError("timeline frame step must be positive");
  if (!(video_rate > 0.0)) throw DataError("timeline video rate must be positive");
}

void Timeline::append(int frame, const ContextState& state) {
  if (!entries_.empty() && frame != entries_.back().frame + frame_step_) {
    throw DataError("timeline entry at frame " + std::to_string(frame) + " breaks the " +
                    std::to_string(frame_step_) + "-frame grid after " +
                    std::to_string(entries_.back().frame));
  }
  entries_.push_back({frame, state});
}

std::vector<StateSegment> segmentize(const Timeline& t, int state) {
  std::vector<StateSegment> out;
  for (const TimelineEntry& e : t.entries()) {
    const int value = e.state.codes.at(state);
    if (!out.empty() && out.back().value == value) {
      out.back().end = e.frame + t.frame_step();
    } else {
      out.push_back({state, value, e.frame, e.frame + t.frame_step()});
    }
  }
  return out;
}

namespace {

int step_for_rate(double video_rate, double rate) {
  if (!(rate > 0.0)) throw DataError("sample rate must be positive");
  const double step = video_rate / rate;
  const double rounded = std::round(step);
  if (rounded < 1.0 || std::abs(step - rounded) > 1e-9) {
    throw DataError("rate " + std::to_string(rate) + " Hz is not a whole-frame step of " +
                    std::to_string(video_rate) + " Hz video");
  }
  return static_cast<int>(rounded);
}

const ContextState& nearest(const Timeline& t, int frame) {
  const auto entries = t.entries();
  const int d = frame - t.first_frame();
  if (d <= 0) return entries.front().state;
  std::size_t k = static_cast<std::size_t>(d / t.frame_step());
  if (2 * (d % t.frame_step()) > t.frame_step()) ++k;
  return entries[std::min(k, entries.size() - 1)].state;
}

}  // namespace

Timeline sample_at(const Timeline& t, int first, int step, std::size_t count) {
  Timeline out(step, t.video_rate());
  if (t.empty()) return out;
  for (std::size_t k = 0; k < count; ++k) {
    const int frame = first + static_cast<int>(k) * step;
    out.append(frame, nearest(t, frame));
  }
  return out;
}

Timeline resample(const Timeline& t, double target_rate) {
  const int step = step_for_rate(t.video_rate(), target_rate);
  const int src = t.frame_step();
  if (step % src != 0 && src % step != 0) {
    throw DataError("cannot resample a " + std::to_string(src) + "-frame grid to " +
                    std::to_string(step) + " frames");
  }
  if (t.empty()) return Timeline(step, t.video_rate());
  const int span = t.end_frame() - t.first_frame();
  const std::size_t count = static_cast<std::size_t>((span + step - 1) / step);
  return sample_at(t, t.first_frame(), step, count);
}

ContextIou context_state_iou(const Timeline& pred, const Timeline& gt) {
  if (pred.frame_step() != gt.frame_step() || pred.video_rate() != gt.video_rate()) {
    throw DataError("context_state_iou: timelines sampled at different rates (" +
                    std::to_string(pred.sample_rate()) + " vs " + std::to_string(gt.sample_rate()) +
                    " Hz)");
  }
  if (pred.size() != gt.size() || pred.first_frame() != gt.first_frame()) {
    throw DataError("context_state_iou: timelines cover different instants");
  }
  ContextIou out;
  double total = 0.0;
  for (int s = 0; s < kNumStates; ++s) {
    const auto gs = segmentize(gt, s);
    const auto ps = segmentize(pred, s);
    std::vector<bool> used(ps.size(), false);
    double sum = 0.0;
    for (const StateSegment& g : gs) {
      int best = -1;
      int best_overlap = 0;
      for (std::size_t k = 0; k < ps.size(); ++k) {
        if (used[k] || ps[k].value != g.value) continue;
        const int overlap = std::min(g.end, ps[k].end) - std::max(g.start, ps[k].start);
        if (overlap > best_overlap) {
          best_overlap = overlap;
          best = static_cast<int>(k);
        }
      }
      if (best < 0) continue;
      used[best] = true;
      const int uni = g.length() + ps[best].length() - best_overlap;
      sum += static_cast<double>(best_overlap) / uni;
    }
    out.per_state[s] = gs.empty() ? 1.0 : sum / static_cast<double>(gs.size());
    total += out.per_state[s];
  }
  out.overall = total / kNumStates;
  return out;
}

ClassIou class_mean_iou(std::span<const BinaryMask> preds, std::span<const BinaryMask> gts) {
  if (preds.size() != gts.size()) {
    throw DimensionMismatchError("class_mean_iou: " + std::to_string(preds.size()) +
                                 " predictions vs " + std::to_string(gts.size()) + " references");
  }
  ClassIou out;
  double sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i].none() && gts[i].none()) continue;
    sum += mask_iou(preds[i], gts[i]);
    ++out.frames_counted;
  }
  if (out.frames_counted > 0) out.mean = sum / static_cast<double>(out.frames_counted);
  return out;
}

void write_timeline_csv(std::ostream& out, const Timeline& t) {
  out << "frame,S1,S2,S3,S4,S5\n";
  for (const TimelineEntry& e : t.entries()) {
    out << e.frame;
    for (int code : e.state.codes) out << ',' << code;
    out << '\n';
  }
}

Timeline read_timeline_csv(std::istream& in, Task task, int default_step, double video_rate) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("timeline CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "frame,S1,S2,S3,S4,S5") throw DataError("timeline CSV: unexpected header '" + line + "'");
  std::vector<TimelineEntry> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    TimelineEntry e;
    e.state.task = task;
    char comma = 0;
    ss >> e.frame;
    for (int& code : e.state.codes) {
      ss >> comma >> code;
      if (comma != ',') break;
    }
    std::string rest;
    if (!ss || comma != ',' || (ss >> rest)) {
      throw DataError("timeline CSV line " + std::to_string(line_no) + ": malformed row");
    }
    rows.push_back(e);
  }
  const int step = rows.size() >= 2 ? rows[1].frame - rows[0].frame : default_step;
  if (step <= 0) throw DataError("timeline CSV: frames must increase");
  Timeline t(step, video_rate);
  for (const TimelineEntry& e : rows) t.append(e.frame, e.state);
  return t;
}

}  // namespace surgctx
