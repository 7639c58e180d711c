#include <cmath>
#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "surgctx/error.hpp"
#include "surgctx/kernels.hpp"
#include "surgctx/mask_ops.hpp"
#include "surgctx/memory_net.hpp"
#include "surgctx/scene_synth.hpp"

namespace surgctx {
namespace {

FeatureMap random_map(std::mt19937_64& rng, int channels, int positions, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  FeatureMap m(channels, positions);
  for (int c = 0; c < channels; ++c) {
    for (double& x : m.channel(c)) x = d(rng);
  }
  return m;
}

TEST(Affinity, Examples) {
  FeatureMap q(1, 1, {0.0});
  FeatureMap m(1, 1, {3.0});
  EXPECT_DOUBLE_EQ(kernels::affinity(q, m)(0, 0), -9.0);
  std::mt19937_64 rng(1);
  const FeatureMap k = random_map(rng, 4, 1);
  FeatureMap q3(4, 3);
  for (int c = 0; c < 4; ++c) {
    for (int i = 0; i < 3; ++i) q3(c, i) = k(c, 0);
  }
  const Matrix self = kernels::affinity(q3, k);
  for (double s : self.data()) EXPECT_NEAR(s, 0.0, 1e-12);
  EXPECT_THROW(kernels::affinity(FeatureMap(2, 3), FeatureMap(3, 3)), DimensionMismatchError);
}

TEST(Affinity, MatchesDirectForm) {
  std::mt19937_64 rng(2);
  const FeatureMap q = random_map(rng, 8, 4);
  const FeatureMap m = random_map(rng, 8, 5);
  const Matrix want = oracle::affinity(q, m);
  EXPECT_LE(oracle::max_abs_diff(kernels::affinity(q, m).data(), want.data()), 1e-9);
  EXPECT_LE(oracle::max_abs_diff(kernels::serial::affinity(q, m).data(), want.data()), 1e-9);
  for (double s : want.data()) EXPECT_LT(s, 0.0);
}

TEST(Softmax, Examples) {
  Matrix s(4, 1, {2.0, 2.0, 2.0, 2.0});
  const Matrix uniform = kernels::normalize_affinity(s);
  for (double w : uniform.data()) EXPECT_DOUBLE_EQ(w, 0.25);
  Matrix t(2, 1, {0.0, -1e6});
  const Matrix w = kernels::normalize_affinity(t);
  EXPECT_NEAR(w(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(w(1, 0), 0.0, 1e-12);
}

TEST(Softmax, MatchesHighPrecision) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 10; ++t) {
    FeatureMap s = random_map(rng, 30, 20, 5.0);
    const Matrix in = s.matrix();
    const Matrix want = oracle::softmax(in);
    for (const Matrix& got : {kernels::normalize_affinity(in), kernels::serial::normalize_affinity(in)}) {
      EXPECT_LE(oracle::max_abs_diff(got.data(), want.data()), 1e-12);
      for (int i = 0; i < got.cols(); ++i) {
        double sum = 0.0;
        for (int j = 0; j < got.rows(); ++j) sum += got(j, i);
        EXPECT_NEAR(sum, 1.0, 1e-12);
      }
    }
  }
}

TEST(Readout, Examples) {
  std::mt19937_64 rng(4);
  const FeatureMap v = random_map(rng, 3, 1);
  const Matrix w(1, 5, std::vector<double>(5, 1.0));
  const FeatureMap out = kernels::readout(v, w);
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(out(c, i), v(c, 0));
  }
  const FeatureMap v4 = random_map(rng, 2, 4);
  const FeatureMap mean = kernels::readout(v4, Matrix(4, 2, std::vector<double>(8, 0.25)));
  for (int c = 0; c < 2; ++c) {
    const double want = (v4(c, 0) + v4(c, 1) + v4(c, 2) + v4(c, 3)) / 4;
    EXPECT_NEAR(mean(c, 0), want, 1e-12);
  }
  EXPECT_THROW(kernels::readout(v4, Matrix(3, 2)), DimensionMismatchError);
}

TEST(Readout, MatchesTripleLoopAndConvexHull) {
  std::mt19937_64 rng(5);
  const FeatureMap v = random_map(rng, 6, 40);
  const Matrix w = kernels::normalize_affinity(random_map(rng, 40, 25, 3.0).matrix());
  const FeatureMap want = oracle::readout(v, w);
  const FeatureMap got = kernels::readout(v, w);
  EXPECT_LE(oracle::max_abs_diff(got.matrix().data(), want.matrix().data()), 1e-9);
  EXPECT_LE(oracle::max_abs_diff(kernels::serial::readout(v, w).matrix().data(), want.matrix().data()), 1e-9);
  for (int c = 0; c < 6; ++c) {
    const auto ch = v.channel(c);
    const double lo = *std::min_element(ch.begin(), ch.end());
    const double hi = *std::max_element(ch.begin(), ch.end());
    for (double x : got.channel(c)) {
      EXPECT_GE(x, lo - 1e-12);
      EXPECT_LE(x, hi + 1e-12);
    }
  }
}

TEST(FeatureMapIo, RoundTripFloat32) {
  std::mt19937_64 rng(6);
  FeatureMap m = random_map(rng, 3, 7);
  // float32 container: compare against rounded values.
  for (int c = 0; c < 3; ++c) {
    for (double& x : m.channel(c)) x = static_cast<float>(x);
  }
  const auto bytes = serialize_feature_map(m);
  EXPECT_EQ(bytes.size(), 16u + 3 * 7 * 4);
  EXPECT_EQ(deserialize_feature_map(bytes), m);
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(deserialize_feature_map(bad), DataError);
  bad = bytes;
  bad.pop_back();
  EXPECT_THROW(deserialize_feature_map(bad), DataError);
}

FeatureMap key_of(int v) { return FeatureMap(1, 1, {static_cast<double>(v)}); }

TEST(MemoryBank, EveryFifthGlobalFrame) {
  MemoryBank bank;
  bank.pin_initial(kExternalFrameIndex, key_of(0), key_of(0));
  for (int f = 0; f <= 12; ++f) EXPECT_EQ(bank.maybe_insert(f, key_of(f), key_of(f)), f % 5 == 0);
  EXPECT_EQ(bank.frame_indices(), (std::vector<int>{-1, 0, 5, 10}));
  EXPECT_THROW(bank.maybe_insert(12, key_of(1), key_of(1)), FrameOrderError);
  EXPECT_THROW(bank.maybe_insert(3, key_of(1), key_of(1)), FrameOrderError);
}

TEST(MemoryBank, CapacityEvictsOldestKeepsInitial) {
  MemoryBank bank(BankOptions{3, {}});
  bank.pin_initial(kExternalFrameIndex, key_of(0), key_of(0));
  // Simulated schedule: keep the newest capacity-1 multiples of 5.
  std::vector<int> stored;
  for (int f = 0; f <= 25; ++f) {
    bank.maybe_insert(f, key_of(f), key_of(f));
    if (f % 5 == 0) stored.push_back(f);
    std::vector<int> want = {-1};
    for (std::size_t k = stored.size() > 2 ? stored.size() - 2 : 0; k < stored.size(); ++k) want.push_back(stored[k]);
    ASSERT_EQ(bank.frame_indices(), want) << "after frame " << f;
  }
  EXPECT_EQ(bank.memory_keys().positions(), 3);
}

TEST(MemoryBank, RejectsTinyCapacityAndChannelMismatch) {
  EXPECT_THROW(MemoryBank(BankOptions{1, {}}), std::invalid_argument);
  MemoryBank bank;
  bank.pin_initial(0, key_of(0), key_of(0));
  EXPECT_THROW(bank.insert(5, FeatureMap(2, 1), key_of(0)), DimensionMismatchError);
}

const SyntheticVideo& translate_video() {
  static const SyntheticVideo v = generate(builtin_script("translate"), 1);
  return v;
}

TEST(InitBank, ModesAndErrors) {
  const auto& v = translate_video();
  const ToyEncoder enc;
  MemoryBank a = init_bank({InitMode::TrainFF, v.frames[0], v.masks[0][0]}, enc);
  EXPECT_EQ(a.frame_indices(), std::vector<int>{kExternalFrameIndex});
  MemoryBank b = init_bank({InitMode::GtFF, v.frames[0], v.masks[0][0]}, enc);
  EXPECT_EQ(b.frame_indices(), std::vector<int>{0});
  EXPECT_THROW(init_bank({InitMode::GtFF, v.frames[0], BinaryMask(320, 240)}, enc), DataError);
  EXPECT_THROW(init_bank({InitMode::GtFF, v.frames[0], BinaryMask(32, 24)}, enc), DimensionMismatchError);
  EXPECT_THROW(segment_frame(MemoryBank(), v.frames[0], enc), UninitializedBankError);
}

TEST(SegmentFrame, SelfMatchReproducesInitMask) {
  const auto& v = translate_video();
  const ToyEncoder enc;
  for (InitMode mode : {InitMode::TrainFF, InitMode::DeeplabFF, InitMode::GtFF}) {
    // Cell-aligned mask so the toy decoder can represent it exactly.
    const BinaryMask mask = decode_occupancy(pooled_occupancy(v.masks[0][0], 8), 8, 320, 240);
    MemoryBank bank = init_bank({mode, v.frames[0], mask}, enc);
    EXPECT_EQ(segment_frame(bank, v.frames[0], enc).mask, mask);
  }
}

TEST(SegmentFrame, EqualsKernelComposition) {
  const auto& v = translate_video();
  const ToyEncoder enc(ToyEncoder::Options{20});
  MemoryBank bank = init_bank({InitMode::GtFF, v.frames[0], v.masks[0][0]}, enc);
  bank.maybe_insert(5, enc.encode_key(v.frames[5]), enc.encode_value(v.frames[5], v.masks[0][5]));
  ASSERT_EQ(bank.size(), 2u);
  const FeatureMap q = enc.encode_key(v.frames[7]);
  const FeatureMap keys = concat_positions(std::vector<FeatureMap>{
      enc.encode_key(v.frames[0]), enc.encode_key(v.frames[5])});
  const FeatureMap vals = concat_positions(std::vector<FeatureMap>{
      enc.encode_value(v.frames[0], v.masks[0][0]), enc.encode_value(v.frames[5], v.masks[0][5])});
  const FeatureMap out = oracle::readout(vals, oracle::softmax_ld(oracle::affinity(q, keys)));
  const BinaryMask want = enc.decode(out, 320, 240);
  EXPECT_EQ(segment_frame(bank, v.frames[7], enc).mask, want);
}

TEST(SegmentBatch, TranslatedShapeIou) {
  const auto& v = translate_video();
  const ToyEncoder enc;
  MemoryBank bank = init_bank({InitMode::GtFF, v.frames[0], v.masks[0][0]}, enc, BankOptions{3, {}});
  const std::span<const Frame> rest(v.frames.data() + 1, v.frames.size() - 1);
  const auto masks = segment_batch(bank, rest, 1, enc);
  for (std::size_t k = 0; k < masks.size(); ++k) {
    EXPECT_GE(mask_iou(masks[k], v.masks[0][k + 1]), 0.8) << "frame " << k + 1;
  }
}

TEST(SegmentBatch, SplitEqualsOnePassAndBatchOfOne) {
  const auto& v = translate_video();
  const ToyEncoder enc;
  const std::span<const Frame> frames(v.frames.data() + 1, 10);
  MemoryBank one = init_bank({InitMode::GtFF, v.frames[0], v.masks[0][0]}, enc);
  const auto whole = segment_batch(one, frames, 1, enc);
  MemoryBank two = init_bank({InitMode::GtFF, v.frames[0], v.masks[0][0]}, enc);
  auto first = segment_batch(two, frames.subspan(0, 5), 1, enc);
  const auto second = segment_batch(two, frames.subspan(5), 6, enc);
  first.insert(first.end(), second.begin(), second.end());
  EXPECT_EQ(first, whole);
  EXPECT_EQ(one.frame_indices(), two.frame_indices());

  MemoryBank a = init_bank({InitMode::GtFF, v.frames[0], v.masks[0][0]}, enc);
  MemoryBank b = a;
  EXPECT_EQ(segment_batch(a, frames.subspan(0, 1), 1, enc).front(),
            segment_frame(b, frames[0], enc).mask);
  EXPECT_THROW(segment_batch(a, frames.subspan(2, 2), 7, enc), FrameOrderError);
}

TEST(SegmentBatch, BatchLocalScheduleCountsFromWindowStart) {
  const auto& v = translate_video();
  const ToyEncoder enc;
  BankOptions bo;
  bo.insertion.batch_local = true;
  MemoryBank bank = init_bank({InitMode::TrainFF, v.frames[0], v.masks[0][0]}, enc, bo);
  segment_batch(bank, std::span<const Frame>(v.frames.data() + 3, 7), 3, enc);
  EXPECT_EQ(bank.frame_indices(), (std::vector<int>{-1, 3, 8}));
}

TEST(ExternalEncoder, ReadsKeysFromDirectory) {
  const auto dir = std::filesystem::temp_directory_path() / "surgctx_fmap_test";
  std::filesystem::create_directories(dir);
  std::mt19937_64 rng(7);
  const FeatureMap k = random_map(rng, 4, 12);
  write_feature_map(ExternalFeatureEncoder::key_path(dir, 3), k);
  const ExternalFeatureEncoder enc(dir, 8);
  const FeatureMap got = enc.encode_key(Frame{3, Image(32, 24)});
  EXPECT_EQ(got.channels(), 4);
  EXPECT_EQ(got.grid_width(), 4);
  EXPECT_NEAR(got(2, 5), static_cast<float>(k(2, 5)), 0.0);
  EXPECT_THROW(enc.encode_key(Frame{4, Image(32, 24)}), DataError);
  EXPECT_THROW(enc.encode_key(Frame{3, Image(40, 24)}), DimensionMismatchError);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace surgctx
