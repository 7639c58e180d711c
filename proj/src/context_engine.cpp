#include "surgctx/context_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "surgctx/error.hpp"
#include "surgctx/mask_ops.hpp"

namespace surgctx {

Scene::Scene() {
  for (ObjectClass c : kAllClasses) objects[index_of(c)] = PolygonSet(c);
}

Scene build_scene(int frame_index, std::span<const ClassMask> masks, const SceneOptions& options) {
  Scene scene;
  scene.frame_index = frame_index;
  for (const ClassMask& cm : masks) {
    const BinaryMask clean = denoise(cm.mask, options.min_component_px);
    const PolygonSet raw = drop_small(extract_contours(clean, cm.cls), options.min_area);
    PolygonSet smooth(cm.cls);
    for (const Polygon& part : raw.parts()) {
      std::vector<Point> ring = rdp_simplify(part.vertices(), options.rdp_epsilon);
      if (ring.size() < 3) continue;
      try {
        smooth.add(Polygon(std::move(ring)));
      } catch (const DegenerateInputError&) {
      }
    }
    scene.object(cm.cls) = std::move(smooth);
    if (std::find(options.loop_classes.begin(), options.loop_classes.end(), cm.cls) !=
        options.loop_classes.end()) {
      scene.enclosed_area[index_of(cm.cls)] = static_cast<double>(enclosed_area(clean));
    }
  }
  return scene;
}

double jaw_separation(const PolygonSet& grasper, const std::optional<JawAnnotation>& annotation) {
  if (grasper.empty()) throw AbsentObjectError("jaw_separation: grasper is absent");
  if (annotation) {
    const Point d = annotation->a - annotation->b;
    return std::sqrt(dot(d, d));
  }
  std::vector<Point> pts;
  for (const Polygon& p : grasper.parts()) pts.insert(pts.end(), p.vertices().begin(), p.vertices().end());
  const Point mid = set_midpoint(grasper);

  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
  for (const Point& p : pts) {
    const Point d = p - mid;
    sxx += d.x * d.x;
    syy += d.y * d.y;
    sxy += d.x * d.y;
  }
  // Minor eigenvector of [[sxx, sxy], [sxy, syy]].
  const double theta = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
  const Point minor{-std::sin(theta), std::cos(theta)};

  std::sort(pts.begin(), pts.end(), [&mid](const Point& a, const Point& b) {
    return dot(a - mid, a - mid) > dot(b - mid, b - mid);
  });
  const std::size_t keep = std::max<std::size_t>(2, (pts.size() + 3) / 4);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < std::min(keep, pts.size()); ++i) {
    const double t = dot(pts[i] - mid, minor);
    lo = std::min(lo, t);
    hi = std::max(hi, t);
  }
  return hi - lo;
}

bool grasper_open(const PolygonSet& grasper, double open_threshold,
                  const std::optional<JawAnnotation>& annotation) {
  return jaw_separation(grasper, annotation) > open_threshold;
}

FeatureVector build_features(const Scene& scene, const RuleSet& rules) {
  FeatureVector v;
  for (ObjectClass c : kAllClasses) v.present[index_of(c)] = !scene.object(c).empty();
  for (int g = 0; g < 2; ++g) {
    const PolygonSet& grasper = scene.objects[g];
    if (!grasper.empty()) {
      v.open[g] = grasper_open(grasper, rules.thresholds().open_px, scene.jaws[g]);
    }
  }
  constexpr double kInf = std::numeric_limits<double>::infinity();
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  for (const FeatureKey& key : rules.required_features()) {
    const PolygonSet& a = scene.object(key.a);
    const PolygonSet& b = scene.object(key.b);
    double value = 0.0;
    switch (key.kind) {
      case FeatureKind::Distance:
        value = a.empty() || b.empty() ? kInf : set_distance(a, b);
        break;
      case FeatureKind::Intersection:
        value = set_intersection_area(a, b);
        break;
      case FeatureKind::MidX:
        value = a.empty() ? kNaN : set_midpoint(a).x;
        break;
      case FeatureKind::MidY:
        value = a.empty() ? kNaN : set_midpoint(a).y;
        break;
      case FeatureKind::Area:
        value = set_area(a);
        break;
      case FeatureKind::Loop:
        value = a.empty() ? 0.0 : scene.enclosed_area[index_of(key.a)];
        break;
    }
    v.set(key, value);
  }
  return v;
}

const RuleSet& default_rules(Task task) {
  static const std::array<RuleSet, 3> kRules = {
      RuleSet::defaults(Task::Suturing),
      RuleSet::defaults(Task::NeedlePassing),
      RuleSet::defaults(Task::KnotTying),
  };
  return kRules[static_cast<int>(task)];
}

int infer_left_hold(const FeatureVector& v, const RuleSet& rules) { return rules.evaluate(0, v); }
int infer_left_contact(const FeatureVector& v, const RuleSet& rules) { return rules.evaluate(1, v); }
int infer_right_hold(const FeatureVector& v, const RuleSet& rules) { return rules.evaluate(2, v); }
int infer_right_contact(const FeatureVector& v, const RuleSet& rules) { return rules.evaluate(3, v); }
int infer_needle_state(const FeatureVector& v, const RuleSet& rules) { return rules.evaluate(4, v); }

ContextState infer_context(const Scene& scene, const RuleSet& rules) {
  return rules.evaluate_all(build_features(scene, rules));
}

}  // namespace surgctx
