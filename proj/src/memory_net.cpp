#include "surgctx/memory_net.hpp"

#include <string>

#include "surgctx/error.hpp"
#include "surgctx/kernels.hpp"

namespace surgctx {

std::string_view init_mode_name(InitMode mode) {
  switch (mode) {
    case InitMode::TrainFF:
      return "train-ff";
    case InitMode::DeeplabFF:
      return "deeplab-ff";
    case InitMode::GtFF:
      return "gt-ff";
  }
  return "unknown";
}

std::optional<InitMode> parse_init_mode(std::string_view text) {
  if (text == "train-ff") return InitMode::TrainFF;
  if (text == "deeplab-ff") return InitMode::DeeplabFF;
  if (text == "gt-ff") return InitMode::GtFF;
  return std::nullopt;
}

MemoryBank::MemoryBank(BankOptions options) : options_(options) {
  if (options_.insertion.period <= 0) throw std::invalid_argument("insertion period must be positive");
  if (options_.capacity && *options_.capacity < 2) {
    throw std::invalid_argument("bank capacity must be at least 2 (initial pair plus one frame)");
  }
}

void MemoryBank::pin_initial(int frame_index, FeatureMap key, FeatureMap value) {
  if (!entries_.empty()) throw std::logic_error("memory bank already holds an initial pair");
  entries_.push_back({frame_index, std::move(key), std::move(value), true});
  if (frame_index >= 0) last_seen_ = frame_index;
  rebuild_cache();
}

std::vector<int> MemoryBank::frame_indices() const {
  std::vector<int> out;
  out.reserve(entries_.size());
  for (const Entry& e : entries_) out.push_back(e.frame_index);
  return out;
}

void MemoryBank::observe(int frame_index) {
  if (last_seen_ && frame_index <= *last_seen_) {
    throw FrameOrderError("frame index " + std::to_string(frame_index) +
                          " does not follow " + std::to_string(*last_seen_));
  }
  last_seen_ = frame_index;
}

void MemoryBank::insert(int frame_index, FeatureMap key, FeatureMap value) {
  if (!initialized()) throw UninitializedBankError("insert before the initial pair");
  if (key.channels() != entries_.front().key.channels() ||
      value.channels() != entries_.front().value.channels()) {
    throw DimensionMismatchError("inserted features do not match the bank's channel counts");
  }
  entries_.push_back({frame_index, std::move(key), std::move(value), false});
  if (options_.capacity && entries_.size() > *options_.capacity) {
    for (auto it = entries_.begin(); it != entries_.end(); ++it) {
      if (!it->pinned) {
        entries_.erase(it);
        break;
      }
    }
  }
  rebuild_cache();
}

bool MemoryBank::maybe_insert(int frame_index, FeatureMap key, FeatureMap value) {
  observe(frame_index);
  if (frame_index % options_.insertion.period != 0) return false;
  insert(frame_index, std::move(key), std::move(value));
  return true;
}

const FeatureMap& MemoryBank::memory_keys() const {
  if (!initialized()) throw UninitializedBankError("memory bank has no entries");
  return keys_cache_;
}

const FeatureMap& MemoryBank::memory_values() const {
  if (!initialized()) throw UninitializedBankError("memory bank has no entries");
  return values_cache_;
}

void MemoryBank::rebuild_cache() {
  std::vector<FeatureMap> keys;
  std::vector<FeatureMap> values;
  keys.reserve(entries_.size());
  values.reserve(entries_.size());
  for (const Entry& e : entries_) {
    keys.push_back(e.key);
    values.push_back(e.value);
  }
  keys_cache_ = concat_positions(keys);
  values_cache_ = concat_positions(values);
}

MemoryBank init_bank(const InitPair& init, const Encoder& encoder, BankOptions options) {
  const Image& img = init.frame.image;
  if (init.mask.width() != img.width() || init.mask.height() != img.height()) {
    throw DimensionMismatchError("init pair: mask and image dimensions differ");
  }
  if (init.mask.none()) {
    throw DataError(std::string("init pair (") + std::string(init_mode_name(init.mode)) +
                    "): mask is empty");
  }
  int frame_index = kExternalFrameIndex;
  if (init.mode == InitMode::GtFF) {
    if (init.frame.index < 0) throw DataError("gt-ff init pair must come from a video frame");
    frame_index = init.frame.index;
  } else if (init.mode == InitMode::DeeplabFF) {
    frame_index = init.frame.index;
  }
  MemoryBank bank(options);
  // The initial key goes through the same key encoder as query frames.
  bank.pin_initial(frame_index, encoder.encode_key(init.frame),
                   encoder.encode_value(init.frame, init.mask));
  return bank;
}

Segmentation segment_frame(const MemoryBank& bank, const Frame& frame, const Encoder& encoder) {
  if (!bank.initialized()) throw UninitializedBankError("segment_frame: bank is not initialized");
  FeatureMap query_key = encoder.encode_key(frame);
  Matrix weights = kernels::affinity(query_key, bank.memory_keys());
  kernels::normalize_affinity_inplace(weights);
  const FeatureMap value = kernels::readout(bank.memory_values(), weights);
  return {encoder.decode(value, frame.image.width(), frame.image.height()), std::move(query_key)};
}

std::vector<BinaryMask> segment_batch(MemoryBank& bank, std::span<const Frame> frames,
                                      int base_index, const Encoder& encoder) {
  std::vector<BinaryMask> masks;
  masks.reserve(frames.size());
  const InsertionPolicy& policy = bank.options().insertion;
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const Frame& frame = frames[k];
    const int global = base_index + static_cast<int>(k);
    if (frame.index != global) {
      throw FrameOrderError("segment_batch: frame " + std::to_string(frame.index) +
                            " at window offset " + std::to_string(k) + " (expected " +
                            std::to_string(global) + ")");
    }
    Segmentation seg = segment_frame(bank, frame, encoder);
    const int schedule = policy.batch_local ? static_cast<int>(k) : global;
    bank.observe(global);
    if (schedule % policy.period == 0) {
      bank.insert(global, std::move(seg.query_key), encoder.encode_value(frame, seg.mask));
    }
    masks.push_back(std::move(seg.mask));
  }
  return masks;
}

}  // namespace surgctx
