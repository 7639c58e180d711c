#pragma once

// Segmentation IOU and temporal context IOU.

#include <array>
#include <iosfwd>
#include <span>
#include <vector>

#include "surgctx/context_state.hpp"
#include "surgctx/mask.hpp"

namespace surgctx {

struct TimelineEntry {
  int frame = 0;
  ContextState state;

  friend bool operator==(const TimelineEntry&, const TimelineEntry&) = default;
};

// Context states sampled every `frame_step` video frames. Entry k sits at
// frame first + k * frame_step and stands for [frame, frame + frame_step).
class Timeline {
 public:
  explicit Timeline(int frame_step = 10, double video_rate = 30.0);

  int frame_step() const { return frame_step_; }
  double video_rate() const { return video_rate_; }
  double sample_rate() const { return video_rate_ / frame_step_; }

  // Throws DataError unless frame continues the uniform grid.
  void append(int frame, const ContextState& state);

  std::span<const TimelineEntry> entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  int first_frame() const { return entries_.empty() ? 0 : entries_.front().frame; }
  // One past the last covered frame.
  int end_frame() const { return entries_.empty() ? 0 : entries_.back().frame + frame_step_; }

  friend bool operator==(const Timeline&, const Timeline&) = default;

 private:
  int frame_step_;
  double video_rate_;
  std::vector<TimelineEntry> entries_;
};

// Half-open [start, end) in video frames.
struct StateSegment {
  int state = 0;
  int value = 0;
  int start = 0;
  int end = 0;

  int length() const { return end - start; }
  friend bool operator==(const StateSegment&, const StateSegment&) = default;
};

// Maximal constant runs of one state variable.
std::vector<StateSegment> segmentize(const Timeline& t, int state);

// Nearest-entry resampling (ties go to the earlier entry). The target step
// (video_rate / target_rate) must be a whole number of frames that divides
// or is divided by the source step; otherwise DataError.
Timeline resample(const Timeline& t, double target_rate);

// Nearest-entry samples of t at first, first + step, ... (count entries).
Timeline sample_at(const Timeline& t, int first, int step, std::size_t count);

struct ContextIou {
  std::array<double, kNumStates> per_state{};
  double overall = 0.0;
};

// Each ground-truth segment, in temporal order, takes the unused predicted
// segment of equal value with the largest overlap (ties: earlier segment);
// without one it scores 0. Per-state score is the mean over ground-truth
// segments. Timelines must share step and sample instants (DataError).
ContextIou context_state_iou(const Timeline& pred, const Timeline& gt);

struct ClassIou {
  double mean = 1.0;
  std::size_t frames_counted = 0;
};

// Mean mask_iou over frames, skipping frames where both masks are empty
// (mean 1.0 if every frame is skipped). Length mismatch -> DimensionMismatchError.
ClassIou class_mean_iou(std::span<const BinaryMask> preds, std::span<const BinaryMask> gts);

// CSV with header `frame,S1,S2,S3,S4,S5`.
void write_timeline_csv(std::ostream& out, const Timeline& t);
// The step is taken from the first two rows; `default_step` covers files
// with a single row. Throws DataError on malformed input.
Timeline read_timeline_csv(std::istream& in, Task task, int default_step = 10,
                           double video_rate = 30.0);

}  // namespace surgctx
