#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

namespace surgctx {

enum class ObjectClass : std::uint8_t {
  LeftGrasper,
  RightGrasper,
  Needle,
  Thread,
  Ring,
  TissuePoints,
};

inline constexpr int kNumClasses = 6;

inline constexpr std::array<ObjectClass, kNumClasses> kAllClasses = {
    ObjectClass::LeftGrasper, ObjectClass::RightGrasper, ObjectClass::Needle,
    ObjectClass::Thread,      ObjectClass::Ring,         ObjectClass::TissuePoints,
};

constexpr int index_of(ObjectClass c) { return static_cast<int>(c); }

// Label written into a LabelFrame; 0 is background.
constexpr std::uint8_t label_of(ObjectClass c) {
  return static_cast<std::uint8_t>(index_of(c) + 1);
}

// Short form used in rule expressions: LG, RG, N, T, R, Ts.
std::string_view abbreviation(ObjectClass c);
// Directory / file stem used in dataset layouts: left_grasper, ...
std::string_view directory_name(ObjectClass c);
// Accepts either the abbreviation or the directory name.
std::optional<ObjectClass> parse_object_class(std::string_view text);

enum class Task : std::uint8_t { Suturing, NeedlePassing, KnotTying };

std::string_view task_name(Task t);
std::optional<Task> parse_task(std::string_view text);

// Object classes a task's scene is built from.
std::span<const ObjectClass> task_classes(Task t);

}  // namespace surgctx
