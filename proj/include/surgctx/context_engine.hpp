#pragma once

// Per-frame scene geometry -> five context state variables.

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "surgctx/context_state.hpp"
#include "surgctx/geometry.hpp"
#include "surgctx/mask.hpp"
#include "surgctx/rules.hpp"

namespace surgctx {

// Jaw-end positions of one grasper.
struct JawAnnotation {
  Point a;
  Point b;

  friend bool operator==(const JawAnnotation&, const JawAnnotation&) = default;
};

struct Scene {
  Scene();

  int frame_index = 0;
  std::array<PolygonSet, kNumClasses> objects;
  // Indexed 0 left, 1 right.
  std::array<std::optional<JawAnnotation>, 2> jaws;
  // Background area enclosed by an object's mask (thread loops); filled
  // for SceneOptions::loop_classes only.
  std::array<double, kNumClasses> enclosed_area{};

  PolygonSet& object(ObjectClass c) { return objects[index_of(c)]; }
  const PolygonSet& object(ObjectClass c) const { return objects[index_of(c)]; }
};

struct SceneOptions {
  int min_component_px = 15;
  double min_area = 15.0;
  double rdp_epsilon = 1.0;
  std::vector<ObjectClass> loop_classes = {ObjectClass::Thread};
};

// denoise -> extract_contours -> drop_small -> RDP, per class mask. Parts
// that collapse below 3 vertices or zero area after smoothing are dropped.
Scene build_scene(int frame_index, std::span<const ClassMask> masks,
                  const SceneOptions& options = {});

// Jaw-end separation: the annotation when given, otherwise estimated from
// the polygon (among the quarter of vertices farthest from the vertex
// midpoint, the spread along the minor principal axis of all vertices).
// Throws AbsentObjectError for an empty set.
double jaw_separation(const PolygonSet& grasper,
                      const std::optional<JawAnnotation>& annotation = std::nullopt);

// Open iff jaw_separation > open_threshold.
bool grasper_open(const PolygonSet& grasper, double open_threshold = 18.0,
                  const std::optional<JawAnnotation>& annotation = std::nullopt);

// Computes every feature the rules reference, plus presence and jaw state.
FeatureVector build_features(const Scene& scene, const RuleSet& rules);

// Built-in rules, constructed once per task.
const RuleSet& default_rules(Task task);

int infer_left_hold(const FeatureVector& v, const RuleSet& rules = default_rules(Task::Suturing));
int infer_left_contact(const FeatureVector& v, const RuleSet& rules = default_rules(Task::Suturing));
int infer_right_hold(const FeatureVector& v, const RuleSet& rules = default_rules(Task::Suturing));
int infer_right_contact(const FeatureVector& v, const RuleSet& rules = default_rules(Task::Suturing));
int infer_needle_state(const FeatureVector& v, const RuleSet& rules = default_rules(Task::Suturing));

ContextState infer_context(const Scene& scene, const RuleSet& rules);

}  // namespace surgctx
