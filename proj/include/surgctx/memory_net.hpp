#pragma once

// Per-object space-time memory: a bank of (key, value) feature pairs from
// past frames, matched against each new frame's key to read out a mask.

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "surgctx/encoder.hpp"

namespace surgctx {

enum class InitMode { TrainFF, DeeplabFF, GtFF };

std::string_view init_mode_name(InitMode mode);  // "train-ff", "deeplab-ff", "gt-ff"
std::optional<InitMode> parse_init_mode(std::string_view text);

// Frame index stored for an initial pair that is not a frame of the video.
inline constexpr int kExternalFrameIndex = -1;

struct InitPair {
  InitMode mode = InitMode::TrainFF;
  // For GtFF / DeeplabFF, frame.index is the video frame the pair comes from.
  Frame frame;
  BinaryMask mask;
};

struct InsertionPolicy {
  int period = 5;
  // Count the schedule from each batch's first frame instead of the video start.
  bool batch_local = false;
};

struct BankOptions {
  // Maximum entries including the pinned initial pair; unlimited when unset.
  std::optional<std::size_t> capacity;
  InsertionPolicy insertion;
};

class MemoryBank {
 public:
  explicit MemoryBank(BankOptions options = {});

  // Stores the initialization pair; it is never evicted.
  void pin_initial(int frame_index, FeatureMap key, FeatureMap value);

  bool initialized() const { return !entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  const BankOptions& options() const { return options_; }
  std::optional<int> last_frame_index() const { return last_seen_; }

  std::vector<int> frame_indices() const;

  // Marks `frame_index` as processed and stores the pair when
  // frame_index % period == 0. Throws FrameOrderError unless frame_index is
  // greater than every index seen so far. Returns whether it was stored.
  bool maybe_insert(int frame_index, FeatureMap key, FeatureMap value);

  // Same ordering check, but storage is decided by the caller.
  void observe(int frame_index);
  void insert(int frame_index, FeatureMap key, FeatureMap value);

  // Keys / values of all entries concatenated along positions, oldest first.
  const FeatureMap& memory_keys() const;
  const FeatureMap& memory_values() const;

 private:
  struct Entry {
    int frame_index;
    FeatureMap key;
    FeatureMap value;
    bool pinned;
  };

  void rebuild_cache();

  BankOptions options_;
  std::vector<Entry> entries_;
  std::optional<int> last_seen_;
  FeatureMap keys_cache_;
  FeatureMap values_cache_;
};

// One-entry bank from the init pair. Throws DataError for an empty mask.
MemoryBank init_bank(const InitPair& init, const Encoder& encoder, BankOptions options = {});

struct Segmentation {
  BinaryMask mask;
  FeatureMap query_key;
};

// decoder(readout(values, normalize_affinity(affinity(key(frame), keys)))).
// Throws UninitializedBankError on an empty bank.
Segmentation segment_frame(const MemoryBank& bank, const Frame& frame, const Encoder& encoder);

// Sequential segment_frame over a window whose first frame has global index
// `base_index` (frames[k].index must equal base_index + k), inserting into
// the bank per its policy. Splitting a sequence into windows gives the same
// masks as one pass when the policy counts from the video start.
std::vector<BinaryMask> segment_batch(MemoryBank& bank, std::span<const Frame> frames,
                                      int base_index, const Encoder& encoder);

}  // namespace surgctx
