#pragma once

// Scripted synthetic scenes: keyframed object tracks rendered to frames and
// per-class masks, with the context timeline taken from the script's events.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "surgctx/context_engine.hpp"
#include "surgctx/encoder.hpp"
#include "surgctx/eval.hpp"

namespace surgctx {

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double angle = 0.0;    // degrees; grasper jaw direction / needle arc start
  double opening = 0.0;  // degrees between grasper jaws
  bool visible = true;
};

struct Keyframe {
  int frame = 0;
  Pose pose;
  // Thread polyline / tissue-point centres, relative to (pose.x, pose.y).
  std::vector<Point> points;
};

// Values interpolate linearly between consecutive keyframes; visibility and
// mismatched point lists hold the earlier keyframe's value. Two keyframes on
// adjacent frames give an instantaneous change.
struct Track {
  ObjectClass cls = ObjectClass::LeftGrasper;
  std::vector<Keyframe> keys;
};

// From `frame` on, state variable `state` (0 = S1) takes `code`. Events past
// the last frame are ignored, so a script can be cut short by lowering
// `frames`.
struct Event {
  int frame = 0;
  int state = 0;
  int code = 0;
};

struct ShapeParams {
  double shaft_length = 150.0;
  double shaft_width = 10.0;
  double jaw_length = 24.0;
  double jaw_width = 5.0;
  double needle_radius = 18.0;
  double needle_thickness = 7.0;
  double thread_width = 4.0;
  double ring_radius = 10.0;
  double tissue_point_size = 7.0;
};

struct Script {
  std::string name;
  Task task = Task::Suturing;
  int frames = 0;
  int width = 320;
  int height = 240;
  double shake_px = 2.0;  // camera shake amplitude, whole pixels
  int noise = 3;          // uniform pixel noise amplitude (gray levels)
  ShapeParams shapes;
  std::array<int, kNumStates> initial{};
  std::vector<Track> tracks;
  std::vector<Event> events;
};

// "suturing", "needle_passing", "knot_tying" (60 s at 30 Hz) and
// "translate" (a ring crossing the frame). Unknown names -> DataError.
Script builtin_script(const std::string& name);
std::vector<std::string> builtin_script_names();

Script parse_script(const std::string& json_text);
Script load_script(const std::string& path);
std::string script_to_json(const Script& s);

struct SynthFrame {
  Frame frame;
  std::array<PolygonSet, kNumClasses> polygons;
  // One mask per class in the script; absent classes have no entry.
  std::vector<ClassMask> masks;
  std::array<std::optional<JawAnnotation>, 2> jaws;
};

// Renders frames on demand. The camera shake for every frame is fixed by
// the seed at construction.
class SceneGenerator {
 public:
  // Throws DataError for malformed scripts or tracks leaving the frame.
  SceneGenerator(Script script, std::uint64_t seed);

  const Script& script() const { return script_; }
  int frame_count() const { return script_.frames; }
  std::vector<ObjectClass> classes() const;

  SynthFrame render(int frame) const;
  // Analytic ground truth from the script's events, one entry per frame.
  Timeline context() const;
  // Ground-truth scene: masks through build_scene, plus jaw annotations.
  Scene scene(const SynthFrame& f, const SceneOptions& options = {}) const;

 private:
  Pose pose_at(const Track& t, int frame, std::vector<Point>* points) const;

  Script script_;
  std::uint64_t seed_;
  std::vector<Point> shake_;
};

struct SyntheticVideo {
  std::vector<Frame> frames;
  std::vector<ObjectClass> classes;
  // masks[i][f]: class classes[i] at frame f.
  std::vector<std::vector<BinaryMask>> masks;
  std::vector<std::array<std::optional<JawAnnotation>, 2>> jaws;
  Timeline context;
};

// Whole-video convenience for short scripts. With `dims` set to other than
// the script size, positions scale per axis and shape sizes by the smaller
// factor.
SyntheticVideo generate(const Script& script, std::uint64_t seed,
                        std::optional<std::pair<int, int>> dims = std::nullopt);

Script rescaled(const Script& s, int width, int height);

}  // namespace surgctx
