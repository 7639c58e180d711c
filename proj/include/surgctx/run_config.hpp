#pragma once

// Settings shared by the command-line tools, loadable from / savable to JSON.

#include <optional>
#include <string>
#include <vector>

#include "surgctx/memory_net.hpp"
#include "surgctx/pipeline.hpp"
#include "surgctx/rules.hpp"

namespace surgctx {

enum class EncoderKind { Toy, ExternalFeatures };

struct RunConfig {
  Task task = Task::Suturing;
  // Empty means the task's class list.
  std::vector<ObjectClass> classes;
  InitMode init_mode = InitMode::GtFF;
  // Train-FF / DeepLab-FF pair: an image plus either a label PNG (0-6) or a
  // directory holding <class>.png masks.
  std::string init_image;
  std::string init_mask;
  Thresholds thresholds;
  std::string rules_path;  // optional RuleSet JSON; thresholds above override it
  BatchConfig batch;
  std::optional<std::size_t> bank_capacity;
  EncoderKind encoder = EncoderKind::Toy;
  int stride = 8;
  std::string features_dir;  // ExternalFeatures only
  std::string input;         // trial directory
  std::string output;
  std::uint64_t seed = 0;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

std::vector<ObjectClass> effective_classes(const RunConfig& c);
RuleSet effective_rules(const RunConfig& c);

std::string to_json(const RunConfig& c);
// Missing keys keep their defaults; unknown values raise DataError.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

}  // namespace surgctx
