#include "surgctx/scene_synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "surgctx/error.hpp"
#include "surgctx/mask_ops.hpp"

namespace surgctx {

namespace {

Point dir_deg(double deg) {
  const double a = deg * std::numbers::pi / 180.0;
  return {std::cos(a), std::sin(a)};
}

void add_part(std::vector<Polygon>& parts, std::vector<Point> ring) {
  try {
    parts.emplace_back(std::move(ring));
  } catch (const DegenerateInputError&) {
  }
}

// Rectangle of width `w` around segment a-b.
void add_bar(std::vector<Polygon>& parts, Point a, Point b, double w) {
  const Point d = b - a;
  const double len = std::sqrt(dot(d, d));
  if (len <= 0.0) return;
  const Point n = (w / (2.0 * len)) * Point{-d.y, d.x};
  add_part(parts, {a + n, b + n, b - n, a - n});
}

void add_disk(std::vector<Polygon>& parts, Point c, double r, int sides) {
  std::vector<Point> ring;
  for (int k = 0; k < sides; ++k) ring.push_back(c + r * dir_deg(360.0 * k / sides));
  add_part(parts, std::move(ring));
}

// Lower jaw lies along the pose angle; the upper jaw turns by the opening
// toward -y for the left grasper and +angle for the right one.
double jaw_side(ObjectClass c) { return c == ObjectClass::LeftGrasper ? -1.0 : 1.0; }

std::vector<Polygon> grasper_parts(ObjectClass cls, const Pose& p, const ShapeParams& s,
                                   JawAnnotation* jaws) {
  const Point h{p.x, p.y};
  const Point u = dir_deg(p.angle);
  const Point v = dir_deg(p.angle + jaw_side(cls) * p.opening);
  std::vector<Polygon> parts;
  add_bar(parts, h - s.shaft_length * u, h, s.shaft_width);
  add_bar(parts, h, h + s.jaw_length * u, s.jaw_width);
  add_bar(parts, h, h + s.jaw_length * v, s.jaw_width);
  if (jaws) *jaws = {h + s.jaw_length * u, h + s.jaw_length * v};
  return parts;
}

// Half-annulus from pose.angle to pose.angle + 180 around (x, y).
std::vector<Polygon> needle_parts(const Pose& p, const ShapeParams& s) {
  constexpr int kSteps = 24;
  const Point c{p.x, p.y};
  const double ro = s.needle_radius + s.needle_thickness / 2.0;
  const double ri = s.needle_radius - s.needle_thickness / 2.0;
  std::vector<Point> ring;
  for (int k = 0; k <= kSteps; ++k) ring.push_back(c + ro * dir_deg(p.angle + 180.0 * k / kSteps));
  for (int k = kSteps; k >= 0; --k) ring.push_back(c + ri * dir_deg(p.angle + 180.0 * k / kSteps));
  std::vector<Polygon> parts;
  add_part(parts, std::move(ring));
  return parts;
}

std::vector<Polygon> thread_parts(std::span<const Point> pts, const ShapeParams& s) {
  std::vector<Polygon> parts;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) add_bar(parts, pts[i], pts[i + 1], s.thread_width);
  for (std::size_t i = 1; i + 1 < pts.size(); ++i) add_disk(parts, pts[i], s.thread_width / 2.0, 8);
  return parts;
}

std::vector<Polygon> tissue_parts(std::span<const Point> pts, const ShapeParams& s) {
  std::vector<Polygon> parts;
  const double h = s.tissue_point_size / 2.0;
  for (const Point& c : pts) {
    add_part(parts, {{c.x - h, c.y - h}, {c.x + h, c.y - h}, {c.x + h, c.y + h}, {c.x - h, c.y + h}});
  }
  return parts;
}

constexpr std::array<std::uint8_t, kNumClasses> kGray = {
    /*LeftGrasper=*/210, /*RightGrasper=*/175, /*Needle=*/250,
    /*Thread=*/130,      /*Ring=*/150,         /*TissuePoints=*/40};
// Back to front.
constexpr std::array<ObjectClass, kNumClasses> kPaintOrder = {
    ObjectClass::TissuePoints, ObjectClass::Ring,   ObjectClass::RightGrasper,
    ObjectClass::LeftGrasper,  ObjectClass::Thread, ObjectClass::Needle};
constexpr std::uint8_t kBackground = 96;

// ---------------------------------------------------------------------------
// Built-in scripts

constexpr double kOpen = 70.0;
constexpr double kClosed = 10.0;
constexpr double kLeftAngle = 30.0;
constexpr double kRightAngle = 150.0;
// Objects are held at this distance from the hinge along the lower jaw.
constexpr double kGrip = 20.0;
// Backing-off distance before contact / after release.
constexpr double kRetreat = 16.0;

class TrackBuilder {
 public:
  explicit TrackBuilder(ObjectClass cls) { track_.cls = cls; }

  void key(int frame, Pose pose, std::vector<Point> points = {}) {
    if (!track_.keys.empty() && track_.keys.back().frame == frame) {
      track_.keys.back() = {frame, pose, std::move(points)};
    } else {
      track_.keys.push_back({frame, pose, std::move(points)});
    }
  }

  // Grasper with its grip point at `grip`.
  void grasp(int frame, Point grip, double angle, double opening) {
    const Point h = grip - kGrip * dir_deg(angle);
    key(frame, {h.x, h.y, angle, opening, true});
  }

  Track take() { return std::move(track_); }

 private:
  Track track_;
};

class EventList {
 public:
  explicit EventList(int frames) : frames_(frames) {}
  void at(int frame, int state, int code) {
    if (frame < frames_) events_.push_back({frame, state, code});
  }
  std::vector<Event> take() {
    std::stable_sort(events_.begin(), events_.end(),
                     [](const Event& a, const Event& b) { return a.frame < b.frame; });
    return std::move(events_);
  }

 private:
  int frames_;
  std::vector<Event> events_;
};

// Needle handed between graspers and driven into a target (tissue points or
// a ring), thread trailing from the needle tail to an anchor.
Script needle_task_script(Task task) {
  constexpr int kCycle = 300;
  constexpr int kCycles = 6;
  Script s;
  s.task = task;
  s.name = std::string(task_name(task));
  s.frames = kCycle * kCycles;
  const double r = s.shapes.needle_radius;

  const Point c_in{181.5, 147.0};   // tip dips 1 px into the target's top edge
  const Point c_out{181.5, 135.0};  // just above the target
  const Point thread_hold{215.0, 195.0};
  const Point thread_anchor{150.0, 210.0};
  const Point left_rest{60.0, 60.0};
  const Point right_rest{270.0, 70.0};
  const Point lu = dir_deg(kLeftAngle);
  const Point ru = dir_deg(kRightAngle);
  auto left_grip = [&](Point c) { return c + r * dir_deg(243.0); };
  auto right_grip = [&](Point c) { return c + r * dir_deg(297.0); };
  auto tail = [&](Point c) { return c + r * dir_deg(180.0); };

  TrackBuilder lg(ObjectClass::LeftGrasper);
  TrackBuilder rg(ObjectClass::RightGrasper);
  TrackBuilder needle(ObjectClass::Needle);
  TrackBuilder thread(ObjectClass::Thread);
  EventList ev(s.frames);
  s.initial = {kNeedle, kNothing, kThread, kNothing, 0};

  auto needle_at = [&](int f, Point c) {
    needle.key(f, {c.x, c.y, 180.0, 0.0, true});
    thread.key(f, {0.0, 0.0, 0.0, 0.0, true}, {tail(c), thread_hold, thread_anchor});
  };

  for (int cyc = 0; cyc < kCycles; ++cyc) {
    const int b = cyc * kCycle;
    const Point c_home{112.0 + 8.0 * (cyc % 3), 108.0 + 4.0 * (cyc % 2)};

    // Left grasper carries the needle out and back, then into the target.
    needle_at(b, c_out);
    needle_at(b + 30, c_home);
    needle_at(b + 59, c_out);
    needle_at(b + 60, c_in);
    needle_at(b + 239, c_in);
    needle_at(b + 240, c_out);
    ev.at(b + 60, 4, 2);

    lg.grasp(b, left_grip(c_out), kLeftAngle, kClosed);
    lg.grasp(b + 30, left_grip(c_home), kLeftAngle, kClosed);
    lg.grasp(b + 59, left_grip(c_out), kLeftAngle, kClosed);
    lg.grasp(b + 60, left_grip(c_in), kLeftAngle, kClosed);
    lg.grasp(b + 179, left_grip(c_in), kLeftAngle, kClosed);
    lg.grasp(b + 180, left_grip(c_in), kLeftAngle, kOpen);
    ev.at(b + 180, 0, kNothing);
    ev.at(b + 180, 1, kNeedle);
    lg.grasp(b + 209, left_grip(c_in), kLeftAngle, kOpen);
    lg.grasp(b + 210, left_grip(c_in) - kRetreat * lu, kLeftAngle, kOpen);
    ev.at(b + 210, 1, kNothing);
    lg.grasp(b + 229, left_rest, kLeftAngle, kOpen);
    lg.grasp(b + 230, left_rest, kLeftAngle, kClosed);
    lg.grasp(b + 269, left_grip(c_out) - kRetreat * lu, kLeftAngle, kClosed);
    lg.grasp(b + 270, left_grip(c_out), kLeftAngle, kClosed);
    ev.at(b + 270, 0, kNeedle);

    // Right grasper: lets go of the thread, takes the needle through,
    // hands it back and returns to the thread.
    rg.grasp(b, thread_hold, kRightAngle, kClosed);
    rg.grasp(b + 39, thread_hold, kRightAngle, kClosed);
    rg.grasp(b + 40, thread_hold, kRightAngle, kOpen);
    ev.at(b + 40, 2, kNothing);
    ev.at(b + 40, 3, kThread);
    rg.grasp(b + 49, thread_hold, kRightAngle, kOpen);
    rg.grasp(b + 50, thread_hold - kRetreat * ru, kRightAngle, kOpen);
    ev.at(b + 50, 3, kNothing);
    ev.at(b + 50, 4, 1);
    rg.grasp(b + 80, right_rest, kRightAngle, kOpen);
    rg.grasp(b + 119, right_grip(c_in) - kRetreat * ru, kRightAngle, kOpen);
    rg.grasp(b + 120, right_grip(c_in), kRightAngle, kOpen);
    ev.at(b + 120, 3, kNeedle);
    rg.grasp(b + 149, right_grip(c_in), kRightAngle, kOpen);
    rg.grasp(b + 150, right_grip(c_in), kRightAngle, kClosed);
    ev.at(b + 150, 2, kNeedle);
    ev.at(b + 150, 3, kNothing);
    rg.grasp(b + 239, right_grip(c_in), kRightAngle, kClosed);
    rg.grasp(b + 240, right_grip(c_out), kRightAngle, kClosed);
    ev.at(b + 240, 4, 1);
    rg.grasp(b + 279, right_grip(c_out), kRightAngle, kClosed);
    rg.grasp(b + 280, right_grip(c_out), kRightAngle, kOpen);
    ev.at(b + 280, 2, kNothing);
    ev.at(b + 280, 3, kNeedle);
    rg.grasp(b + 289, right_grip(c_out), kRightAngle, kOpen);
    rg.grasp(b + 290, right_grip(c_out) - kRetreat * ru, kRightAngle, kOpen);
    ev.at(b + 290, 3, kNothing);
    rg.grasp(b + 294, right_rest, kRightAngle, kOpen);
    rg.grasp(b + 295, right_rest, kRightAngle, kClosed);
    rg.grasp(b + 299, thread_hold - kRetreat * ru, kRightAngle, kClosed);
    ev.at(b + 300, 2, kThread);
    ev.at(b + 300, 4, 0);
  }

  s.tracks = {lg.take(), rg.take(), needle.take(), thread.take()};
  if (task == Task::Suturing) {
    TrackBuilder ts(ObjectClass::TissuePoints);
    ts.key(0, {0.0, 0.0, 0.0, 0.0, true}, {{199.5, 149.5}, {217.5, 149.5}});
    s.tracks.push_back(ts.take());
  } else {
    TrackBuilder ring(ObjectClass::Ring);
    ring.key(0, {199.5, 156.0, 0.0, 0.0, true});
    s.tracks.push_back(ring.take());
  }
  s.events = ev.take();
  return s;
}

// Both graspers on the thread while a loop is formed and pulled tight.
Script knot_tying_script() {
  constexpr int kCycle = 300;
  constexpr int kCycles = 6;
  Script s;
  s.task = Task::KnotTying;
  s.name = "knot_tying";
  s.frames = kCycle * kCycles;

  const std::vector<Point> straight = {{60, 170},  {90, 172},  {120, 174}, {150, 175}, {180, 175},
                                       {200, 174}, {220, 172}, {240, 171}, {260, 170}};
  const std::vector<Point> loop = {{60, 170},  {90, 172},  {150, 172}, {172, 148}, {155, 122},
                                   {128, 128}, {122, 155}, {240, 171}, {260, 170}};
  const Point left_hold = straight[1];
  const Point right_hold = straight[7];
  const Point left_rest{60.0, 60.0};
  const Point right_rest{270.0, 70.0};
  const Point lu = dir_deg(kLeftAngle);
  const Point ru = dir_deg(kRightAngle);

  TrackBuilder lg(ObjectClass::LeftGrasper);
  TrackBuilder rg(ObjectClass::RightGrasper);
  TrackBuilder thread(ObjectClass::Thread);
  EventList ev(s.frames);
  s.initial = {kThread, kNothing, kNothing, kNothing, 0};
  const Pose origin{0.0, 0.0, 0.0, 0.0, true};

  for (int cyc = 0; cyc < kCycles; ++cyc) {
    const int b = cyc * kCycle;
    thread.key(b, origin, straight);
    thread.key(b + 59, origin, straight);
    thread.key(b + 60, origin, loop);
    ev.at(b + 60, 4, 1);
    thread.key(b + 179, origin, loop);
    thread.key(b + 180, origin, straight);
    ev.at(b + 180, 4, 0);

    lg.grasp(b, left_hold, kLeftAngle, kClosed);
    lg.grasp(b + 209, left_hold, kLeftAngle, kClosed);
    lg.grasp(b + 210, left_hold, kLeftAngle, kOpen);
    ev.at(b + 210, 0, kNothing);
    ev.at(b + 210, 1, kThread);
    lg.grasp(b + 229, left_hold, kLeftAngle, kOpen);
    lg.grasp(b + 230, left_hold - kRetreat * lu, kLeftAngle, kOpen);
    ev.at(b + 230, 1, kNothing);
    lg.grasp(b + 250, left_rest, kLeftAngle, kOpen);
    lg.grasp(b + 260, left_rest, kLeftAngle, kClosed);
    lg.grasp(b + 299, left_hold - kRetreat * lu, kLeftAngle, kClosed);
    ev.at(b + 300, 0, kThread);

    rg.grasp(b, right_rest, kRightAngle, kOpen);
    rg.grasp(b + 40, right_rest, kRightAngle, kOpen);
    rg.grasp(b + 89, right_hold - kRetreat * ru, kRightAngle, kOpen);
    rg.grasp(b + 90, right_hold, kRightAngle, kOpen);
    ev.at(b + 90, 3, kThread);
    rg.grasp(b + 119, right_hold, kRightAngle, kOpen);
    rg.grasp(b + 120, right_hold, kRightAngle, kClosed);
    ev.at(b + 120, 2, kThread);
    ev.at(b + 120, 3, kNothing);
    ev.at(b + 120, 4, 2);
    rg.grasp(b + 249, right_hold, kRightAngle, kClosed);
    rg.grasp(b + 250, right_hold, kRightAngle, kOpen);
    ev.at(b + 250, 2, kNothing);
    ev.at(b + 250, 3, kThread);
    rg.grasp(b + 264, right_hold, kRightAngle, kOpen);
    rg.grasp(b + 265, right_hold - kRetreat * ru, kRightAngle, kOpen);
    ev.at(b + 265, 3, kNothing);
    rg.grasp(b + 280, right_rest, kRightAngle, kOpen);
  }
  s.tracks = {lg.take(), rg.take(), thread.take()};
  s.events = ev.take();
  return s;
}

// A ring disk sliding across the frame.
Script translate_script() {
  Script s;
  s.name = "translate";
  s.task = Task::NeedlePassing;
  s.frames = 100;
  s.shake_px = 0.0;
  s.shapes.ring_radius = 24.0;
  TrackBuilder ring(ObjectClass::Ring);
  ring.key(0, {70.0, 110.0, 0.0, 0.0, true});
  ring.key(99, {250.0, 130.0, 0.0, 0.0, true});
  s.tracks = {ring.take()};
  return s;
}

}  // namespace

Script builtin_script(const std::string& name) {
  if (name == "suturing") return needle_task_script(Task::Suturing);
  if (name == "needle_passing") return needle_task_script(Task::NeedlePassing);
  if (name == "knot_tying") return knot_tying_script();
  if (name == "translate") return translate_script();
  throw DataError("unknown built-in script '" + name + "'");
}

std::vector<std::string> builtin_script_names() {
  return {"suturing", "needle_passing", "knot_tying", "translate"};
}

// ---------------------------------------------------------------------------
// JSON

std::string script_to_json(const Script& s) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["name"] = s.name;
  j["task"] = std::string(task_name(s.task));
  j["frames"] = s.frames;
  j["width"] = s.width;
  j["height"] = s.height;
  j["shake_px"] = s.shake_px;
  j["noise"] = s.noise;
  const ShapeParams& p = s.shapes;
  j["shapes"] = {{"shaft_length", p.shaft_length},   {"shaft_width", p.shaft_width},
                 {"jaw_length", p.jaw_length},       {"jaw_width", p.jaw_width},
                 {"needle_radius", p.needle_radius}, {"needle_thickness", p.needle_thickness},
                 {"thread_width", p.thread_width},   {"ring_radius", p.ring_radius},
                 {"tissue_point_size", p.tissue_point_size}};
  j["initial"] = s.initial;
  ordered_json tracks = ordered_json::array();
  for (const Track& t : s.tracks) {
    ordered_json keys = ordered_json::array();
    for (const Keyframe& k : t.keys) {
      ordered_json kj = {{"frame", k.frame},         {"x", k.pose.x},
                         {"y", k.pose.y},            {"angle", k.pose.angle},
                         {"opening", k.pose.opening}, {"visible", k.pose.visible}};
      if (!k.points.empty()) {
        ordered_json pts = ordered_json::array();
        for (const Point& q : k.points) pts.push_back({q.x, q.y});
        kj["points"] = pts;
      }
      keys.push_back(kj);
    }
    tracks.push_back({{"object", std::string(directory_name(t.cls))}, {"keys", keys}});
  }
  j["tracks"] = tracks;
  ordered_json events = ordered_json::array();
  for (const Event& e : s.events) {
    events.push_back({{"frame", e.frame}, {"state", std::string(state_name(e.state))}, {"code", e.code}});
  }
  j["events"] = events;
  return j.dump(2);
}

Script parse_script(const std::string& json_text) {
  Script s;
  try {
    const nlohmann::json j = nlohmann::json::parse(json_text);
    s.name = j.value("name", std::string("script"));
    auto task = parse_task(j.at("task").get<std::string>());
    if (!task) throw DataError("script: unknown task " + j.at("task").dump());
    s.task = *task;
    s.frames = j.at("frames").get<int>();
    s.width = j.value("width", s.width);
    s.height = j.value("height", s.height);
    s.shake_px = j.value("shake_px", s.shake_px);
    s.noise = j.value("noise", s.noise);
    if (j.contains("shapes")) {
      const auto& p = j["shapes"];
      ShapeParams& q = s.shapes;
      q.shaft_length = p.value("shaft_length", q.shaft_length);
      q.shaft_width = p.value("shaft_width", q.shaft_width);
      q.jaw_length = p.value("jaw_length", q.jaw_length);
      q.jaw_width = p.value("jaw_width", q.jaw_width);
      q.needle_radius = p.value("needle_radius", q.needle_radius);
      q.needle_thickness = p.value("needle_thickness", q.needle_thickness);
      q.thread_width = p.value("thread_width", q.thread_width);
      q.ring_radius = p.value("ring_radius", q.ring_radius);
      q.tissue_point_size = p.value("tissue_point_size", q.tissue_point_size);
    }
    if (j.contains("initial")) s.initial = j["initial"].get<std::array<int, kNumStates>>();
    for (const auto& tj : j.at("tracks")) {
      Track t;
      auto cls = parse_object_class(tj.at("object").get<std::string>());
      if (!cls) throw DataError("script: unknown object " + tj.at("object").dump());
      t.cls = *cls;
      for (const auto& kj : tj.at("keys")) {
        Keyframe k;
        k.frame = kj.at("frame").get<int>();
        k.pose.x = kj.value("x", 0.0);
        k.pose.y = kj.value("y", 0.0);
        k.pose.angle = kj.value("angle", 0.0);
        k.pose.opening = kj.value("opening", 0.0);
        k.pose.visible = kj.value("visible", true);
        if (kj.contains("points")) {
          for (const auto& pj : kj["points"]) k.points.push_back({pj.at(0).get<double>(), pj.at(1).get<double>()});
        }
        t.keys.push_back(std::move(k));
      }
      s.tracks.push_back(std::move(t));
    }
    if (j.contains("events")) {
      for (const auto& ej : j["events"]) {
        Event e;
        e.frame = ej.at("frame").get<int>();
        e.code = ej.at("code").get<int>();
        const std::string name = ej.at("state").get<std::string>();
        e.state = -1;
        for (int i = 0; i < kNumStates; ++i) {
          if (state_name(i) == name) e.state = i;
        }
        if (e.state < 0) throw DataError("script: unknown state \"" + name + "\"");
        s.events.push_back(e);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("script: ") + e.what());
  }
  return s;
}

Script load_script(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open script " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_script(ss.str());
}

Script rescaled(const Script& s, int width, int height) {
  if (width <= 0 || height <= 0) throw DimensionMismatchError("rescaled: dimensions must be positive");
  Script out = s;
  const double sx = static_cast<double>(width) / s.width;
  const double sy = static_cast<double>(height) / s.height;
  const double k = std::min(sx, sy);
  out.width = width;
  out.height = height;
  for (Track& t : out.tracks) {
    for (Keyframe& key : t.keys) {
      key.pose.x *= sx;
      key.pose.y *= sy;
      for (Point& p : key.points) p = {p.x * sx, p.y * sy};
    }
  }
  ShapeParams& p = out.shapes;
  for (double* v : {&p.shaft_length, &p.shaft_width, &p.jaw_length, &p.jaw_width, &p.needle_radius,
                    &p.needle_thickness, &p.thread_width, &p.ring_radius, &p.tissue_point_size}) {
    *v *= k;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Generator

SceneGenerator::SceneGenerator(Script script, std::uint64_t seed)
    : script_(std::move(script)), seed_(seed) {
  const Script& s = script_;
  if (s.frames <= 0) throw DataError("script '" + s.name + "': frame count must be positive");
  if (s.width <= 0 || s.height <= 0) throw DataError("script '" + s.name + "': bad dimensions");
  auto inside = [&s](Point p) { return p.x >= 0.0 && p.y >= 0.0 && p.x <= s.width && p.y <= s.height; };
  for (const Track& t : s.tracks) {
    if (t.keys.empty()) throw DataError("script '" + s.name + "': track without keyframes");
    for (std::size_t i = 0; i < t.keys.size(); ++i) {
      const Keyframe& k = t.keys[i];
      if (i > 0 && k.frame <= t.keys[i - 1].frame) {
        throw DataError("script '" + s.name + "': keyframes of " + std::string(directory_name(t.cls)) +
                        " must increase");
      }
      if (!k.pose.visible) continue;
      const Point origin{k.pose.x, k.pose.y};
      const bool point_list = t.cls == ObjectClass::Thread || t.cls == ObjectClass::TissuePoints;
      bool ok = point_list || inside(origin);
      for (const Point& p : k.points) ok = ok && inside(origin + p);
      if (!ok) {
        throw DataError("script '" + s.name + "': " + std::string(directory_name(t.cls)) +
                        " leaves the frame at keyframe " + std::to_string(k.frame));
      }
    }
  }
  for (std::size_t i = 0; i < s.events.size(); ++i) {
    const Event& e = s.events[i];
    if (e.state < 0 || e.state >= kNumStates) throw DataError("script: event state out of range");
    if (e.frame < 0) throw DataError("script: event before the first frame");
    if (i > 0 && e.frame < s.events[i - 1].frame) throw DataError("script: events must be in frame order");
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  const double px = phase(rng);
  const double py = phase(rng);
  shake_.resize(s.frames);
  for (int f = 0; f < s.frames; ++f) {
    shake_[f] = {std::round(s.shake_px * std::sin(2.0 * std::numbers::pi * f / 97.0 + px)),
                 std::round(s.shake_px * std::sin(2.0 * std::numbers::pi * f / 61.0 + py))};
  }
}

std::vector<ObjectClass> SceneGenerator::classes() const {
  std::vector<ObjectClass> out;
  for (ObjectClass c : kAllClasses) {
    for (const Track& t : script_.tracks) {
      if (t.cls == c) {
        out.push_back(c);
        break;
      }
    }
  }
  return out;
}

Pose SceneGenerator::pose_at(const Track& t, int frame, std::vector<Point>* points) const {
  const auto& keys = t.keys;
  auto after = std::upper_bound(keys.begin(), keys.end(), frame,
                                [](int f, const Keyframe& k) { return f < k.frame; });
  if (after == keys.begin() || after == keys.end()) {
    const Keyframe& k = after == keys.begin() ? keys.front() : keys.back();
    if (points) *points = k.points;
    return k.pose;
  }
  const Keyframe& a = *(after - 1);
  const Keyframe& b = *after;
  const double w = static_cast<double>(frame - a.frame) / (b.frame - a.frame);
  auto mix = [w](double p, double q) { return p + w * (q - p); };
  Pose p{mix(a.pose.x, b.pose.x), mix(a.pose.y, b.pose.y), mix(a.pose.angle, b.pose.angle),
         mix(a.pose.opening, b.pose.opening), a.pose.visible};
  if (points) {
    points->clear();
    if (a.points.size() == b.points.size()) {
      for (std::size_t i = 0; i < a.points.size(); ++i) {
        points->push_back({mix(a.points[i].x, b.points[i].x), mix(a.points[i].y, b.points[i].y)});
      }
    } else {
      *points = a.points;
    }
  }
  return p;
}

SynthFrame SceneGenerator::render(int frame) const {
  const Script& s = script_;
  if (frame < 0 || frame >= s.frames) throw DataError("render: frame outside the script");
  const Point shift = shake_[frame];
  SynthFrame out{{frame, Image(s.width, s.height, kBackground)}, {}, {}, {}};
  for (ObjectClass c : kAllClasses) out.polygons[index_of(c)] = PolygonSet(c);

  for (const Track& t : s.tracks) {
    std::vector<Point> pts;
    const Pose pose = pose_at(t, frame, &pts);
    if (!pose.visible) continue;
    std::vector<Polygon> parts;
    const Point origin{pose.x, pose.y};
    for (Point& p : pts) p = p + origin;
    switch (t.cls) {
      case ObjectClass::LeftGrasper:
      case ObjectClass::RightGrasper: {
        JawAnnotation jaws;
        parts = grasper_parts(t.cls, pose, s.shapes, &jaws);
        out.jaws[index_of(t.cls)] = JawAnnotation{jaws.a + shift, jaws.b + shift};
        break;
      }
      case ObjectClass::Needle:
        parts = needle_parts(pose, s.shapes);
        break;
      case ObjectClass::Thread:
        parts = thread_parts(pts, s.shapes);
        break;
      case ObjectClass::Ring:
        add_disk(parts, origin, s.shapes.ring_radius, 32);
        break;
      case ObjectClass::TissuePoints:
        parts = tissue_parts(pts, s.shapes);
        break;
    }
    PolygonSet& set = out.polygons[index_of(t.cls)];
    for (Polygon& p : parts) set.add(p);
  }
  for (ObjectClass c : kAllClasses) {
    out.polygons[index_of(c)] = translated(out.polygons[index_of(c)], shift);
  }

  const std::vector<ObjectClass> present = classes();
  std::array<std::optional<BinaryMask>, kNumClasses> masks;
  for (ObjectClass c : present) masks[index_of(c)] = rasterize(out.polygons[index_of(c)], s.width, s.height);

  Image& img = out.frame.image;
  for (ObjectClass c : kPaintOrder) {
    if (!masks[index_of(c)]) continue;
    const auto bits = masks[index_of(c)]->bits();
    auto px = img.pixels();
    for (std::size_t i = 0; i < bits.size(); ++i) {
      if (bits[i]) px[i] = kGray[index_of(c)];
    }
  }
  if (s.noise > 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                      static_cast<std::uint32_t>(frame)};
    std::mt19937_64 rng(seq);
    std::uniform_int_distribution<int> noise(-s.noise, s.noise);
    for (std::uint8_t& p : img.pixels()) p = static_cast<std::uint8_t>(std::clamp(p + noise(rng), 0, 255));
  }
  for (ObjectClass c : present) out.masks.push_back({c, std::move(*masks[index_of(c)])});
  return out;
}

Timeline SceneGenerator::context() const {
  Timeline t(1, 30.0);
  ContextState state;
  state.task = script_.task;
  state.codes = script_.initial;
  std::size_t next = 0;
  for (int f = 0; f < script_.frames; ++f) {
    while (next < script_.events.size() && script_.events[next].frame == f) {
      state.codes[script_.events[next].state] = script_.events[next].code;
      ++next;
    }
    t.append(f, state);
  }
  return t;
}

Scene SceneGenerator::scene(const SynthFrame& f, const SceneOptions& options) const {
  Scene sc = build_scene(f.frame.index, f.masks, options);
  sc.jaws = f.jaws;
  return sc;
}

SyntheticVideo generate(const Script& script, std::uint64_t seed,
                        std::optional<std::pair<int, int>> dims) {
  const Script s = dims && (dims->first != script.width || dims->second != script.height)
                       ? rescaled(script, dims->first, dims->second)
                       : script;
  SceneGenerator gen(s, seed);
  SyntheticVideo v;
  v.classes = gen.classes();
  v.masks.resize(v.classes.size());
  v.context = gen.context();
  for (int f = 0; f < gen.frame_count(); ++f) {
    SynthFrame sf = gen.render(f);
    for (std::size_t i = 0; i < sf.masks.size(); ++i) v.masks[i].push_back(std::move(sf.masks[i].mask));
    v.jaws.push_back(sf.jaws);
    v.frames.push_back(std::move(sf.frame));
  }
  return v;
}

}  // namespace surgctx
