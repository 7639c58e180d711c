#include "surgctx/object_class.hpp"

namespace surgctx {

namespace {

constexpr std::array<std::string_view, kNumClasses> kAbbrev = {"LG", "RG", "N", "T", "R", "Ts"};
constexpr std::array<std::string_view, kNumClasses> kDirNames = {
    "left_grasper", "right_grasper", "needle", "thread", "ring", "tissue_points"};

constexpr std::array<ObjectClass, 5> kSuturingClasses = {
    ObjectClass::LeftGrasper, ObjectClass::RightGrasper, ObjectClass::Needle,
    ObjectClass::Thread, ObjectClass::TissuePoints};
constexpr std::array<ObjectClass, 5> kNeedlePassingClasses = {
    ObjectClass::LeftGrasper, ObjectClass::RightGrasper, ObjectClass::Needle,
    ObjectClass::Thread, ObjectClass::Ring};
constexpr std::array<ObjectClass, 3> kKnotTyingClasses = {
    ObjectClass::LeftGrasper, ObjectClass::RightGrasper, ObjectClass::Thread};

}  // namespace

std::string_view abbreviation(ObjectClass c) { return kAbbrev[index_of(c)]; }

std::string_view directory_name(ObjectClass c) { return kDirNames[index_of(c)]; }

std::optional<ObjectClass> parse_object_class(std::string_view text) {
  for (ObjectClass c : kAllClasses) {
    if (text == abbreviation(c) || text == directory_name(c)) return c;
  }
  return std::nullopt;
}

std::string_view task_name(Task t) {
  switch (t) {
    case Task::Suturing:
      return "suturing";
    case Task::NeedlePassing:
      return "needle_passing";
    case Task::KnotTying:
      return "knot_tying";
  }
  return "unknown";
}

std::optional<Task> parse_task(std::string_view text) {
  if (text == "suturing") return Task::Suturing;
  if (text == "needle_passing" || text == "needle-passing") return Task::NeedlePassing;
  if (text == "knot_tying" || text == "knot-tying") return Task::KnotTying;
  return std::nullopt;
}

std::span<const ObjectClass> task_classes(Task t) {
  switch (t) {
    case Task::Suturing:
      return kSuturingClasses;
    case Task::NeedlePassing:
      return kNeedlePassingClasses;
    case Task::KnotTying:
      return kKnotTyingClasses;
  }
  return {};
}

}  // namespace surgctx
