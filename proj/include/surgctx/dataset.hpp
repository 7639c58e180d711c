#pragma once

// On-disk trial layout:
//
//   <trial>/frames/NNNNN.png
//   <trial>/masks/<class>/NNNNN.png
//   <trial>/context.csv        frame,S1,S2,S3,S4,S5
//   <trial>/jaws.csv           optional jaw-end annotations
//   <trial>/manifest.txt       key=value (video_rate, context_rate, task, ...)

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "surgctx/context_engine.hpp"
#include "surgctx/eval.hpp"
#include "surgctx/scene_synth.hpp"

namespace surgctx {

struct Manifest {
  Task task = Task::Suturing;
  double video_rate = 30.0;
  double context_rate = 3.0;
  int width = 0;
  int height = 0;
  int frames = 0;
  // Keys this struct does not model, kept for round trips.
  std::map<std::string, std::string> extra;

  int context_step() const;  // video frames per context sample
};

Manifest read_manifest(const std::filesystem::path& trial);
void write_manifest(const std::filesystem::path& trial, const Manifest& m);

std::string frame_file_name(int index);  // "00042.png"
std::filesystem::path frame_path(const std::filesystem::path& trial, int index);
std::filesystem::path mask_dir(const std::filesystem::path& trial, ObjectClass cls);
std::filesystem::path mask_path(const std::filesystem::path& trial, ObjectClass cls, int index);

// Sorted frame indices found under <trial>/frames.
std::vector<int> list_frames(const std::filesystem::path& trial);
// Sorted indices under <trial>/masks/<class>; empty when the folder is missing.
std::vector<int> list_masks(const std::filesystem::path& trial, ObjectClass cls);

using JawTable = std::map<int, std::array<std::optional<JawAnnotation>, 2>>;
void write_jaws_csv(const std::filesystem::path& path, const JawTable& jaws);
JawTable read_jaws_csv(const std::filesystem::path& path);

void write_timeline(const std::filesystem::path& path, const Timeline& t);
Timeline read_timeline(const std::filesystem::path& path, Task task, int default_step,
                       double video_rate = 30.0);

// Renders every frame of the generator into `trial` (frames, masks, jaws,
// manifest) and writes the script's context at `context_rate`.
void write_corpus(const SceneGenerator& gen, const std::filesystem::path& trial,
                  double context_rate = 3.0);

}  // namespace surgctx
