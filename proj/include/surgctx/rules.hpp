#pragma once

// Ordered condition -> code cases per state variable, evaluated over a
// FeatureVector. Conditions are small boolean expressions, e.g.
//
//   D(LG,N) < hold && closed(LG)
//   (Inter(Ts,N) == 0 || N.x >= Ts.x) && (D(RG,T) > hold || D(LG,N) > hold)
//   otherwise
//
// Operands: numbers, threshold names (hold, open_px, area), D(A,B) mean set
// distance, Inter(A,B) intersection area, A.x / A.y vertex midpoint, Area(A)
// union area, Loop(A) area enclosed by the object's mask. Predicates:
// open(A), closed(A), present(A). A comparison or open/closed test that
// mentions an absent object is false.

#include <array>
#include <compare>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "surgctx/context_state.hpp"
#include "surgctx/object_class.hpp"

namespace surgctx {

struct Thresholds {
  double hold = 1.0;      // D(G,N) below this counts as touching
  double open_px = 18.0;  // jaw-end separation above this is open
  double area = 15.0;     // area floor (polygons, loops)

  friend bool operator==(const Thresholds&, const Thresholds&) = default;
};

enum class FeatureKind : std::uint8_t { Distance, Intersection, MidX, MidY, Area, Loop };

struct FeatureKey {
  FeatureKind kind = FeatureKind::Distance;
  ObjectClass a = ObjectClass::LeftGrasper;
  ObjectClass b = ObjectClass::LeftGrasper;  // unused by single-object kinds

  friend auto operator<=>(const FeatureKey&, const FeatureKey&) = default;
};

std::string feature_label(const FeatureKey& key);  // "D(LG,N)", "N.x", ...

// Measurements for one frame. Distances to absent objects are +inf and
// intersections 0, but rule atoms consult `present` first.
struct FeatureVector {
  std::array<bool, kNumClasses> present{};
  // Jaw state for the two graspers; unset when the grasper is absent.
  std::array<std::optional<bool>, 2> open{};
  std::map<FeatureKey, double> values;

  // Throws DataError when the feature was never computed.
  double value(const FeatureKey& key) const;
  void set(const FeatureKey& key, double v) { values[key] = v; }
};

// One parsed condition.
class Condition {
 public:
  // Throws DataError with the offending position on malformed text.
  static Condition parse(std::string_view text);

  bool evaluate(const FeatureVector& v, const Thresholds& th) const;
  // True for `otherwise` / `true`.
  bool unconditional() const;
  const std::string& source() const { return source_; }
  std::vector<FeatureKey> features() const;

 private:
  enum class Op : std::uint8_t {
    Or, And, Not, Const,
    Lt, Le, Gt, Ge, Eq, Ne,
    Open, Closed, Present,
  };
  enum class OperandKind : std::uint8_t { Number, Threshold, Feature };
  struct Operand {
    OperandKind kind = OperandKind::Number;
    double number = 0.0;
    int threshold = 0;  // 0 hold, 1 open_px, 2 area
    FeatureKey feature;
  };
  struct Node {
    Op op = Op::Const;
    int lhs = -1;  // child node (Or/And/Not) ...
    int rhs = -1;
    bool constant = true;
    Operand a;  // ... or comparison operands
    Operand b;
    ObjectClass object = ObjectClass::LeftGrasper;  // predicates
  };
  class Parser;

  bool eval_node(int n, const FeatureVector& v, const Thresholds& th) const;
  double operand_value(const Operand& o, const FeatureVector& v, const Thresholds& th) const;

  std::string source_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

struct RuleCase {
  int code = 0;
  Condition when;
};

class RuleSet {
 public:
  // Built-in rules for each task with default thresholds.
  static RuleSet defaults(Task task);
  // JSON: {"task": "suturing", "thresholds": {"hold": 1.0, ...},
  //        "states": {"S1": [{"code": 2, "when": "..."}, ...], ...}}
  // Missing thresholds or states fall back to the task defaults.
  static RuleSet parse(std::string_view json_text);
  static RuleSet load(const std::string& path);
  std::string to_json() const;

  Task task() const { return task_; }
  const Thresholds& thresholds() const { return thresholds_; }
  Thresholds& thresholds() { return thresholds_; }

  const std::vector<RuleCase>& cases(int state) const { return cases_.at(state); }
  // Throws DataError unless the last case is unconditional.
  void set_cases(int state, std::vector<RuleCase> cases);

  // Code of the first case whose condition holds.
  int evaluate(int state, const FeatureVector& v) const;
  ContextState evaluate_all(const FeatureVector& v) const;

  // Every feature any condition reads, sorted and unique.
  std::vector<FeatureKey> required_features() const;

 private:
  Task task_ = Task::Suturing;
  Thresholds thresholds_;
  std::array<std::vector<RuleCase>, kNumStates> cases_;
};

}  // namespace surgctx
