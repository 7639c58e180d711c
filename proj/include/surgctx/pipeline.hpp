#pragma once

// Non-overlapping frame windows pushed through per-class segmentation
// workers (in parallel) and last-frame context inference, timed against
// the window's real-time deadline.

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "surgctx/context_engine.hpp"
#include "surgctx/eval.hpp"
#include "surgctx/memory_net.hpp"

namespace surgctx {

struct BatchConfig {
  int batch_size = 10;
  double source_rate = 30.0;

  // Time the window takes to arrive: batch_size / source_rate seconds.
  double deadline_ms() const { return batch_size / source_rate * 1000.0; }

  friend bool operator==(const BatchConfig&, const BatchConfig&) = default;
};

struct StageTiming {
  int first_frame = 0;
  int last_frame = 0;
  double segmentation_ms = 0.0;      // wall clock of the parallel stage
  double segmentation_sum_ms = 0.0;  // summed over workers
  double context_ms = 0.0;
  double total_ms = 0.0;  // segmentation_ms + context_ms
  bool deadline_met = true;
  bool failed = false;
  std::string error;
};

class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual std::size_t size() const = 0;
  // Frames are returned in increasing index order.
  virtual Frame frame(std::size_t i) const = 0;
};

class InMemoryFrameSource final : public FrameSource {
 public:
  explicit InMemoryFrameSource(std::vector<Frame> frames) : frames_(std::move(frames)) {}
  std::size_t size() const override { return frames_.size(); }
  Frame frame(std::size_t i) const override { return frames_.at(i); }

 private:
  std::vector<Frame> frames_;
};

// `<dir>/NNNNN.png` (or .pgm); the file number is the frame index.
class DirectoryFrameSource final : public FrameSource {
 public:
  // Throws DataError when the directory holds no frames.
  explicit DirectoryFrameSource(const std::filesystem::path& dir);
  std::size_t size() const override { return files_.size(); }
  Frame frame(std::size_t i) const override;
  int frame_index(std::size_t i) const { return indices_.at(i); }

 private:
  std::vector<std::filesystem::path> files_;
  std::vector<int> indices_;
};

// One segmentation worker: exclusively owns its class's memory bank.
struct Worker {
  ObjectClass cls;
  MemoryBank bank;
};

struct PipelineOptions {
  // Workers run concurrently; false gives the sequential reference run.
  bool parallel = true;
  // Source positions before `start` are skipped (e.g. a GT-FF init frame).
  std::size_t start = 0;
  SceneOptions scene;
  // Called after each window, in frame order, for every (worker, frame).
  std::function<void(const Worker&, const Frame&, const BinaryMask&)> on_mask;
};

struct RunResult {
  // One entry per complete window, at the window's last frame. A trailing
  // partial window is segmented and timed but left off the uniform timeline.
  Timeline timeline;
  std::vector<StageTiming> timings;
};

// Segments every frame for every worker and infers context for the last
// frame of each window. A worker that throws marks its window failed; the
// window's context repeats the previous state and the run continues.
RunResult run_pipeline(const FrameSource& source, const BatchConfig& cfg,
                       std::vector<Worker>& workers, const Encoder& encoder,
                       const RuleSet& rules, const PipelineOptions& options = {});

struct DeadlineSummary {
  std::size_t batches = 0;
  std::size_t met = 0;
  std::size_t failed = 0;
  double fraction_met = 1.0;
  double max_total_ms = 0.0;
  double mean_total_ms = 0.0;
  double max_segmentation_ms = 0.0;
  double mean_segmentation_ms = 0.0;
  double mean_segmentation_sum_ms = 0.0;
  double max_context_ms = 0.0;
  double mean_context_ms = 0.0;
};

// Re-checks every timing against cfg.deadline_ms().
DeadlineSummary check_deadlines(std::span<const StageTiming> timings, const BatchConfig& cfg);

}  // namespace surgctx
