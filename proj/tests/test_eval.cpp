#include <algorithm>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "surgctx/error.hpp"
#include "surgctx/eval.hpp"
#include "surgctx/mask_ops.hpp"
#include "surgctx/report.hpp"

namespace surgctx {
namespace {

ContextState st(std::array<int, 5> c) { return {Task::Suturing, c}; }

// One state variable (S1) from a list of codes; other states 0.
Timeline s1_timeline(const std::vector<int>& codes, int step = 1, int first = 0) {
  Timeline t(step);
  for (std::size_t k = 0; k < codes.size(); ++k) t.append(first + static_cast<int>(k) * step, st({codes[k], 0, 0, 0, 0}));
  return t;
}

Timeline random_timeline(std::mt19937_64& rng, int n, int step) {
  std::uniform_int_distribution<int> code(0, 3);
  std::bernoulli_distribution flip(0.2);
  Timeline t(step);
  std::array<int, 5> cur{};
  for (int k = 0; k < n; ++k) {
    for (int& c : cur) {
      if (flip(rng)) c = code(rng);
    }
    t.append(k * step, st(cur));
  }
  return t;
}

TEST(Timeline, EnforcesUniformGrid) {
  Timeline t(10);
  t.append(5, st({}));
  t.append(15, st({}));
  EXPECT_THROW(t.append(20, st({})), DataError);
  EXPECT_EQ(t.end_frame(), 25);
  EXPECT_DOUBLE_EQ(t.sample_rate(), 3.0);
}

TEST(Segmentize, Examples) {
  EXPECT_EQ(segmentize(s1_timeline({1, 1, 1}), 0).size(), 1u);
  const auto segs = segmentize(s1_timeline({2, 2, 0, 0, 0, 3}), 0);
  ASSERT_EQ(segs.size(), 3u);
  EXPECT_EQ(segs[0].length(), 2);
  EXPECT_EQ(segs[1].length(), 3);
  EXPECT_EQ(segs[2].length(), 1);
  EXPECT_EQ(segs[2].value, 3);
}

TEST(Segmentize, RoundTripsRandomTimelines) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 20; ++t) {
    const Timeline tl = random_timeline(rng, 50, 10);
    for (int s = 0; s < kNumStates; ++s) {
      std::vector<int> rebuilt;
      const auto segs = segmentize(tl, s);
      for (std::size_t k = 0; k < segs.size(); ++k) {
        if (k > 0) {
          EXPECT_EQ(segs[k].start, segs[k - 1].end);
          EXPECT_NE(segs[k].value, segs[k - 1].value);
        }
        for (int f = segs[k].start; f < segs[k].end; f += 10) rebuilt.push_back(segs[k].value);
      }
      ASSERT_EQ(rebuilt.size(), tl.size());
      for (std::size_t k = 0; k < tl.size(); ++k) EXPECT_EQ(rebuilt[k], tl.entries()[k].state.codes[s]);
    }
  }
}

TEST(ContextIou, Examples) {
  std::mt19937_64 rng(2);
  const Timeline t = random_timeline(rng, 40, 1);
  const ContextIou self = context_state_iou(t, t);
  for (double x : self.per_state) EXPECT_DOUBLE_EQ(x, 1.0);
  EXPECT_DOUBLE_EQ(self.overall, 1.0);

  // gt: 2 on [0,4), 0 on [4,8). pred constant 0.
  const Timeline gt = s1_timeline({2, 2, 2, 2, 0, 0, 0, 0});
  const ContextIou zero = context_state_iou(s1_timeline({0, 0, 0, 0, 0, 0, 0, 0}), gt);
  // The 2-segment scores 0; the 0-segment [4,8) vs [0,8) scores 0.5.
  EXPECT_DOUBLE_EQ(zero.per_state[0], (0.0 + 0.5) / 2);

  // The 2-run moves to [2,6): overlap 2, union 6. The 0-run [4,12) pairs
  // with [6,12): overlap 6, union 8.
  const Timeline shifted = s1_timeline({0, 0, 2, 2, 2, 2, 0, 0, 0, 0, 0, 0});
  const Timeline orig = s1_timeline({2, 2, 2, 2, 0, 0, 0, 0, 0, 0, 0, 0});
  EXPECT_DOUBLE_EQ(context_state_iou(shifted, orig).per_state[0],
                   (1.0 / 3.0 + 0.75) / 2);
  EXPECT_THROW(context_state_iou(s1_timeline({0, 0}, 10), s1_timeline({0, 0}, 5)), DataError);
  EXPECT_THROW(context_state_iou(s1_timeline({0, 0, 0}), s1_timeline({0, 0})), DataError);
}

TEST(ContextIou, OnePredictedSegmentPerGroundTruthSegment) {
  // Two gt 2-segments; the prediction has one long 2-segment covering both.
  const Timeline gt = s1_timeline({2, 2, 0, 0, 2, 2});
  const Timeline pred = s1_timeline({2, 2, 2, 2, 2, 2});
  // First gt segment takes the only pred 2-segment (IOU 2/6); the second
  // finds none. The gt 0-segment has no partner either.
  EXPECT_DOUBLE_EQ(context_state_iou(pred, gt).per_state[0], (2.0 / 6.0 + 0.0 + 0.0) / 3);
}

TEST(ContextIou, RatiosInUnitInterval) {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 30; ++k) {
    const ContextIou r = context_state_iou(random_timeline(rng, 30, 10), random_timeline(rng, 30, 10));
    for (double x : r.per_state) {
      EXPECT_GE(x, 0.0);
      EXPECT_LE(x, 1.0);
    }
  }
}

TEST(Resample, Examples) {
  std::mt19937_64 rng(4);
  const Timeline t = random_timeline(rng, 95, 1);
  const Timeline down = resample(t, 3.0);
  EXPECT_EQ(down.frame_step(), 10);
  ASSERT_EQ(down.size(), 10u);
  for (std::size_t k = 0; k < down.size(); ++k) EXPECT_EQ(down.entries()[k].state, t.entries()[k * 10].state);
  EXPECT_EQ(resample(t, 30.0), t);
  EXPECT_THROW(resample(t, 7.0), DataError);
}

TEST(Resample, RoundTripOnLongSegments) {
  // Segments of at least 10 frames aligned to the 3 Hz grid.
  std::vector<int> codes;
  for (int v : {0, 2, 3, 0, 2}) codes.insert(codes.end(), 20, v);
  const Timeline t = s1_timeline(codes);
  const Timeline back = resample(resample(t, 3.0), 30.0);
  for (std::size_t k = 0; k < t.size(); k += 10) EXPECT_EQ(back.entries()[k].state, t.entries()[k].state);
}

TEST(ClassIou, Examples) {
  BinaryMask a(4, 4);
  a.set(1, 1, true);
  BinaryMask b(4, 4);
  b.set(2, 2, true);
  const std::vector<BinaryMask> gts = {a, a, a, a};
  EXPECT_DOUBLE_EQ(class_mean_iou(gts, gts).mean, 1.0);
  const std::vector<BinaryMask> alt = {a, b, a, b};
  EXPECT_DOUBLE_EQ(class_mean_iou(alt, gts).mean, 0.5);
  const std::vector<BinaryMask> empty = {BinaryMask(4, 4), a};
  const std::vector<BinaryMask> empty_gt = {BinaryMask(4, 4), a};
  const ClassIou skip = class_mean_iou(empty, empty_gt);
  EXPECT_EQ(skip.frames_counted, 1u);
  EXPECT_THROW(class_mean_iou(alt, empty), DimensionMismatchError);
}

TEST(ClassIou, MatchesHandAverage) {
  std::mt19937_64 rng(5);
  std::bernoulli_distribution on(0.3);
  std::vector<BinaryMask> p, g;
  for (int k = 0; k < 10; ++k) {
    BinaryMask x(8, 8), y(8, 8);
    for (int i = 0; i < 64; ++i) {
      x.set(i % 8, i / 8, on(rng));
      y.set(i % 8, i / 8, on(rng));
    }
    p.push_back(x);
    g.push_back(y);
  }
  double sum = 0;
  for (int k = 0; k < 10; ++k) {
    int inter = 0, uni = 0;
    for (int i = 0; i < 64; ++i) {
      inter += p[k].bits()[i] && g[k].bits()[i];
      uni += p[k].bits()[i] || g[k].bits()[i];
    }
    sum += static_cast<double>(inter) / uni;
  }
  EXPECT_NEAR(class_mean_iou(p, g).mean, sum / 10, 1e-12);
}

TEST(TimelineCsv, RoundTrip) {
  std::mt19937_64 rng(6);
  const Timeline t = random_timeline(rng, 20, 10);
  std::stringstream ss;
  write_timeline_csv(ss, t);
  EXPECT_EQ(ss.str().substr(0, 18), "frame,S1,S2,S3,S4,");
  EXPECT_EQ(read_timeline_csv(ss, Task::Suturing), t);
  std::stringstream bad("frame,S1,S2\n0,1,2\n");
  EXPECT_THROW(read_timeline_csv(bad, Task::Suturing), DataError);
  std::stringstream uneven("frame,S1,S2,S3,S4,S5\n0,0,0,0,0,0\n10,0,0,0,0,0\n25,0,0,0,0,0\n");
  EXPECT_THROW(read_timeline_csv(uneven, Task::Suturing), DataError);
}

TEST(Report, DeterministicAndShaped) {
  Metrics m;
  EXPECT_EQ(emit_report(m).class_csv, "class,iou,frames\n");
  m.classes = {{"LG", {0.9, 10}}, {"N", {0.5, 8}}};
  ContextIou c;
  c.per_state = {1, 0.5, 1, 1, 0.25};
  c.overall = 0.75;
  m.context = c;
  m.timing = {{10, 333.3, 100, 400, 5, 105, 1.0}};
  const Report a = emit_report(m);
  const Report b = emit_report(m);
  EXPECT_EQ(a.text, b.text);
  EXPECT_EQ(a.timing_csv, b.timing_csv);
  auto lines = [](const std::string& s) { return std::count(s.begin(), s.end(), '\n'); };
  EXPECT_EQ(lines(a.class_csv), 3);
  EXPECT_EQ(lines(a.context_csv), 1 + kNumStates + 1);
  EXPECT_EQ(lines(a.timing_csv), 2);
}

}  // namespace
}  // namespace surgctx
