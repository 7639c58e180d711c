#include <chrono>
#include <map>
#include <stdexcept>
#include <thread>

#include <gtest/gtest.h>

#include "surgctx/error.hpp"
#include "surgctx/pipeline.hpp"
#include "surgctx/scene_synth.hpp"

namespace surgctx {
namespace {

// Toy encoder that misbehaves on one frame.
class FaultyEncoder final : public Encoder {
 public:
  FaultyEncoder(int bad_frame, bool fail, int delay_ms)
      : inner_(ToyEncoder::Options{20}), bad_(bad_frame), fail_(fail), delay_ms_(delay_ms) {}

  FeatureMap encode_key(const Frame& f) const override {
    if (f.index == bad_) {
      if (fail_) throw std::runtime_error("injected fault");
      std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms_));
    }
    return inner_.encode_key(f);
  }
  FeatureMap encode_value(const Frame& f, const BinaryMask& m) const override {
    return inner_.encode_value(f, m);
  }
  BinaryMask decode(const FeatureMap& v, int w, int h) const override { return inner_.decode(v, w, h); }
  int stride() const override { return inner_.stride(); }

 private:
  ToyEncoder inner_;
  int bad_;
  bool fail_;
  int delay_ms_;
};

const SyntheticVideo& video() {
  static const SyntheticVideo v = [] {
    Script s = builtin_script("suturing");
    s.frames = 51;
    return generate(s, 3);
  }();
  return v;
}

std::vector<Worker> gt_workers(const Encoder& enc) {
  const auto& v = video();
  std::vector<Worker> out;
  for (std::size_t i = 0; i < v.classes.size(); ++i) {
    if (v.masks[i][0].none()) continue;
    out.push_back({v.classes[i], init_bank({InitMode::GtFF, v.frames[0], v.masks[i][0]}, enc,
                                           BankOptions{3, {}})});
  }
  return out;
}

using MaskLog = std::map<std::pair<ObjectClass, int>, BinaryMask>;

RunResult run(int batch, const Encoder& enc, bool parallel, MaskLog* log = nullptr) {
  InMemoryFrameSource source(video().frames);
  std::vector<Worker> workers = gt_workers(enc);
  PipelineOptions opt;
  opt.start = 1;
  opt.parallel = parallel;
  if (log) {
    opt.on_mask = [log](const Worker& w, const Frame& f, const BinaryMask& m) {
      log->insert_or_assign({w.cls, f.index}, m);
    };
  }
  return run_pipeline(source, BatchConfig{batch}, workers, enc, default_rules(Task::Suturing), opt);
}

TEST(BatchConfig, Deadline) {
  EXPECT_NEAR(BatchConfig{10}.deadline_ms(), 333.333, 1e-3);
  EXPECT_NEAR(BatchConfig{25}.deadline_ms(), 833.333, 1e-3);
}

TEST(Pipeline, TimelineAtWindowEnds) {
  const ToyEncoder enc(ToyEncoder::Options{20});
  MaskLog log;
  const RunResult r = run(5, enc, true, &log);
  ASSERT_EQ(r.timeline.size(), 10u);
  for (std::size_t k = 0; k < r.timeline.size(); ++k) {
    EXPECT_EQ(r.timeline.entries()[k].frame, 5 * static_cast<int>(k + 1));
  }
  EXPECT_EQ(r.timings.size(), 10u);
  EXPECT_EQ(log.size(), 50u * gt_workers(enc).size());
}

TEST(Pipeline, PartialWindowTimedButNotOnTimeline) {
  const ToyEncoder enc(ToyEncoder::Options{20});
  MaskLog log;
  const RunResult r = run(15, enc, true, &log);
  // 50 frames: 3 full windows and one of 5.
  EXPECT_EQ(r.timeline.size(), 3u);
  ASSERT_EQ(r.timings.size(), 4u);
  EXPECT_EQ(r.timings.back().first_frame, 46);
  EXPECT_EQ(r.timings.back().last_frame, 50);
  EXPECT_EQ(log.size(), 50u * gt_workers(enc).size());
}

TEST(Pipeline, BatchSizeDoesNotChangeMasks) {
  const ToyEncoder enc(ToyEncoder::Options{20});
  MaskLog a, b;
  const RunResult ra = run(5, enc, true, &a);
  const RunResult rb = run(25, enc, true, &b);
  EXPECT_EQ(a, b);
  // Context at a shared window end agrees too.
  ASSERT_EQ(rb.timeline.size(), 2u);
  EXPECT_EQ(ra.timeline.entries()[4].state, rb.timeline.entries()[0].state);
  EXPECT_EQ(ra.timeline.entries()[9].state, rb.timeline.entries()[1].state);
}

TEST(Pipeline, ParallelMatchesSequential) {
  const ToyEncoder enc(ToyEncoder::Options{20});
  MaskLog a, b;
  const RunResult ra = run(10, enc, true, &a);
  const RunResult rb = run(10, enc, false, &b);
  EXPECT_EQ(a, b);
  EXPECT_EQ(ra.timeline, rb.timeline);
}

TEST(Pipeline, InjectedFailureHoldsLastState) {
  const FaultyEncoder enc(23, true, 0);
  const RunResult r = run(10, enc, true);
  ASSERT_EQ(r.timings.size(), 5u);
  for (std::size_t k = 0; k < r.timings.size(); ++k) EXPECT_EQ(r.timings[k].failed, k == 2);
  EXPECT_NE(r.timings[2].error.find("injected fault"), std::string::npos);
  EXPECT_EQ(r.timeline.entries()[2].state, r.timeline.entries()[1].state);
  const DeadlineSummary s = check_deadlines(r.timings, BatchConfig{10});
  EXPECT_EQ(s.failed, 1u);
}

TEST(Pipeline, InjectedDelayMissesDeadline) {
  const FaultyEncoder enc(13, false, 400);
  const RunResult r = run(10, enc, false);
  EXPECT_FALSE(r.timings[1].deadline_met);
  EXPECT_GE(r.timings[1].total_ms, 400.0);
  const DeadlineSummary s = check_deadlines(r.timings, BatchConfig{10});
  EXPECT_LT(s.met, s.batches);
  EXPECT_LT(s.fraction_met, 1.0);
}

TEST(Pipeline, Errors) {
  const ToyEncoder enc(ToyEncoder::Options{20});
  InMemoryFrameSource source(video().frames);
  std::vector<Worker> workers = gt_workers(enc);
  EXPECT_THROW(run_pipeline(source, BatchConfig{0}, workers, enc, default_rules(Task::Suturing)),
               std::invalid_argument);
  std::vector<Worker> empty_bank;
  empty_bank.push_back({ObjectClass::Needle, MemoryBank()});
  EXPECT_THROW(run_pipeline(source, BatchConfig{5}, empty_bank, enc, default_rules(Task::Suturing)),
               UninitializedBankError);
  std::vector<Frame> shuffled = video().frames;
  std::swap(shuffled[3], shuffled[4]);
  InMemoryFrameSource bad(shuffled);
  EXPECT_THROW(run_pipeline(bad, BatchConfig{10}, workers, enc, default_rules(Task::Suturing),
                            PipelineOptions{true, 1, {}, {}}),
               FrameOrderError);
}

TEST(CheckDeadlines, Summary) {
  std::vector<StageTiming> t(3);
  t[0].total_ms = 100;
  t[1].total_ms = 400;
  t[2].total_ms = 200;
  t[2].failed = true;
  const DeadlineSummary s = check_deadlines(t, BatchConfig{10});
  EXPECT_EQ(s.batches, 3u);
  EXPECT_EQ(s.met, 2u);
  EXPECT_EQ(s.failed, 1u);
  EXPECT_DOUBLE_EQ(s.max_total_ms, 400.0);
  EXPECT_NEAR(s.mean_total_ms, 700.0 / 3, 1e-9);
}

}  // namespace
}  // namespace surgctx
