#pragma once

#include <array>
#include <string_view>

#include "surgctx/object_class.hpp"

namespace surgctx {

// S1 left hold, S2 left contact, S3 right hold, S4 right contact, S5 task state.
inline constexpr int kNumStates = 5;

// Interaction codes used by S1-S4.
inline constexpr int kNothing = 0;
inline constexpr int kNeedle = 2;
inline constexpr int kThread = 3;

struct ContextState {
  Task task = Task::Suturing;
  std::array<int, kNumStates> codes{};

  int s1_left_hold() const { return codes[0]; }
  int s2_left_contact() const { return codes[1]; }
  int s3_right_hold() const { return codes[2]; }
  int s4_right_contact() const { return codes[3]; }
  int s5_task_state() const { return codes[4]; }

  friend bool operator==(const ContextState&, const ContextState&) = default;
};

// "S1" .. "S5".
std::string_view state_name(int state);

}  // namespace surgctx
