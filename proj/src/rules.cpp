#include "surgctx/rules.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "surgctx/error.hpp"

namespace surgctx {

std::string_view state_name(int state) {
  static constexpr std::array<std::string_view, kNumStates> kNames = {"S1", "S2", "S3", "S4", "S5"};
  return kNames.at(state);
}

std::string feature_label(const FeatureKey& key) {
  const std::string a(abbreviation(key.a));
  const std::string b(abbreviation(key.b));
  switch (key.kind) {
    case FeatureKind::Distance:
      return "D(" + a + "," + b + ")";
    case FeatureKind::Intersection:
      return "Inter(" + a + "," + b + ")";
    case FeatureKind::MidX:
      return a + ".x";
    case FeatureKind::MidY:
      return a + ".y";
    case FeatureKind::Area:
      return "Area(" + a + ")";
    case FeatureKind::Loop:
      return "Loop(" + a + ")";
  }
  return "?";
}

double FeatureVector::value(const FeatureKey& key) const {
  auto it = values.find(key);
  if (it == values.end()) throw DataError("feature " + feature_label(key) + " was not computed");
  return it->second;
}

// ---------------------------------------------------------------------------
// Expression parsing

class Condition::Parser {
 public:
  Parser(std::string_view text, Condition& out) : text_(text), out_(out) {}

  int parse() {
    const int root = parse_or();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected trailing text");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw DataError("rule condition \"" + std::string(text_) + "\" at " + std::to_string(pos_) +
                    ": " + what);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(std::string_view tok) {
    skip_space();
    if (text_.substr(pos_, tok.size()) != tok) return false;
    pos_ += tok.size();
    return true;
  }

  void expect(std::string_view tok) {
    if (!accept(tok)) fail("expected '" + std::string(tok) + "'");
  }

  std::string_view peek_identifier() {
    skip_space();
    std::size_t end = pos_;
    while (end < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[end])) || text_[end] == '_')) {
      ++end;
    }
    return text_.substr(pos_, end - pos_);
  }

  std::string_view identifier() {
    std::string_view id = peek_identifier();
    if (id.empty() || std::isdigit(static_cast<unsigned char>(id.front()))) fail("expected a name");
    pos_ += id.size();
    return id;
  }

  ObjectClass object() {
    const std::string_view id = identifier();
    auto cls = parse_object_class(id);
    if (!cls) fail("unknown object '" + std::string(id) + "'");
    return *cls;
  }

  int add(Node n) {
    out_.nodes_.push_back(n);
    return static_cast<int>(out_.nodes_.size()) - 1;
  }

  int parse_or() {
    int lhs = parse_and();
    while (accept("||")) {
      Node n;
      n.op = Op::Or;
      n.lhs = lhs;
      n.rhs = parse_and();
      lhs = add(n);
    }
    return lhs;
  }

  int parse_and() {
    int lhs = parse_unary();
    while (accept("&&")) {
      Node n;
      n.op = Op::And;
      n.lhs = lhs;
      n.rhs = parse_unary();
      lhs = add(n);
    }
    return lhs;
  }

  int parse_unary() {
    skip_space();
    // '!' but not '!='.
    if (pos_ < text_.size() && text_[pos_] == '!' && text_.substr(pos_, 2) != "!=") {
      ++pos_;
      Node n;
      n.op = Op::Not;
      n.lhs = parse_unary();
      return add(n);
    }
    return parse_primary();
  }

  int parse_primary() {
    if (accept("(")) {
      const int inner = parse_or();
      expect(")");
      return inner;
    }
    const std::string_view id = peek_identifier();
    if (id == "otherwise" || id == "true" || id == "false") {
      pos_ += id.size();
      Node n;
      n.op = Op::Const;
      n.constant = id != "false";
      return add(n);
    }
    if (id == "open" || id == "closed" || id == "present") {
      pos_ += id.size();
      Node n;
      n.op = id == "open" ? Op::Open : id == "closed" ? Op::Closed : Op::Present;
      expect("(");
      n.object = object();
      if (n.op != Op::Present && n.object != ObjectClass::LeftGrasper &&
          n.object != ObjectClass::RightGrasper) {
        fail("open/closed apply to graspers only");
      }
      expect(")");
      return add(n);
    }
    Node n;
    n.a = operand();
    skip_space();
    static constexpr std::array<std::pair<std::string_view, Op>, 6> kOps = {{
        {"<=", Op::Le}, {">=", Op::Ge}, {"==", Op::Eq}, {"!=", Op::Ne}, {"<", Op::Lt}, {">", Op::Gt},
    }};
    bool found = false;
    for (const auto& [tok, op] : kOps) {
      if (accept(tok)) {
        n.op = op;
        found = true;
        break;
      }
    }
    if (!found) fail("expected a comparison operator");
    n.b = operand();
    return add(n);
  }

  Operand operand() {
    skip_space();
    Operand o;
    if (pos_ < text_.size() &&
        (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '-' ||
         text_[pos_] == '.')) {
      const std::string rest(text_.substr(pos_));
      std::size_t used = 0;
      try {
        o.number = std::stod(rest, &used);
      } catch (const std::exception&) {
        fail("bad number");
      }
      pos_ += used;
      o.kind = OperandKind::Number;
      return o;
    }
    const std::string_view id = identifier();
    if (id == "hold" || id == "open_px" || id == "area") {
      o.kind = OperandKind::Threshold;
      o.threshold = id == "hold" ? 0 : id == "open_px" ? 1 : 2;
      return o;
    }
    o.kind = OperandKind::Feature;
    if (id == "D" || id == "Inter") {
      o.feature.kind = id == "D" ? FeatureKind::Distance : FeatureKind::Intersection;
      expect("(");
      o.feature.a = object();
      expect(",");
      o.feature.b = object();
      expect(")");
      return o;
    }
    if (id == "Area" || id == "Loop") {
      o.feature.kind = id == "Area" ? FeatureKind::Area : FeatureKind::Loop;
      expect("(");
      o.feature.a = object();
      o.feature.b = o.feature.a;
      expect(")");
      return o;
    }
    auto cls = parse_object_class(id);
    if (!cls) fail("unknown operand '" + std::string(id) + "'");
    expect(".");
    const std::string_view axis = identifier();
    if (axis != "x" && axis != "y") fail("expected .x or .y");
    o.feature.kind = axis == "x" ? FeatureKind::MidX : FeatureKind::MidY;
    o.feature.a = *cls;
    o.feature.b = *cls;
    return o;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  Condition& out_;
};

Condition Condition::parse(std::string_view text) {
  Condition c;
  c.source_ = std::string(text);
  c.root_ = Parser(c.source_, c).parse();
  return c;
}

bool Condition::unconditional() const {
  return root_ >= 0 && nodes_[root_].op == Op::Const && nodes_[root_].constant;
}

std::vector<FeatureKey> Condition::features() const {
  std::vector<FeatureKey> out;
  for (const Node& n : nodes_) {
    for (const Operand* o : {&n.a, &n.b}) {
      if (n.op >= Op::Lt && n.op <= Op::Ne && o->kind == OperandKind::Feature) {
        out.push_back(o->feature);
      }
    }
  }
  return out;
}

double Condition::operand_value(const Operand& o, const FeatureVector& v,
                                const Thresholds& th) const {
  switch (o.kind) {
    case OperandKind::Number:
      return o.number;
    case OperandKind::Threshold:
      return o.threshold == 0 ? th.hold : o.threshold == 1 ? th.open_px : th.area;
    case OperandKind::Feature:
      return v.value(o.feature);
  }
  return 0.0;
}

bool Condition::evaluate(const FeatureVector& v, const Thresholds& th) const {
  if (root_ < 0) return false;
  return eval_node(root_, v, th);
}

bool Condition::eval_node(int index, const FeatureVector& v, const Thresholds& th) const {
  const Node& n = nodes_[index];
  auto mentions_absent = [&v](const Operand& o) {
    return o.kind == OperandKind::Feature &&
           (!v.present[index_of(o.feature.a)] || !v.present[index_of(o.feature.b)]);
  };
  switch (n.op) {
    case Op::Or:
      return eval_node(n.lhs, v, th) || eval_node(n.rhs, v, th);
    case Op::And:
      return eval_node(n.lhs, v, th) && eval_node(n.rhs, v, th);
    case Op::Not:
      return !eval_node(n.lhs, v, th);
    case Op::Const:
      return n.constant;
    case Op::Open:
    case Op::Closed: {
      const auto& state = v.open[index_of(n.object)];
      if (!v.present[index_of(n.object)] || !state) return false;
      return n.op == Op::Open ? *state : !*state;
    }
    case Op::Present:
      return v.present[index_of(n.object)];
    default:
      break;
  }
  if (mentions_absent(n.a) || mentions_absent(n.b)) return false;
  const double a = operand_value(n.a, v, th);
  const double b = operand_value(n.b, v, th);
  switch (n.op) {
    case Op::Lt:
      return a < b;
    case Op::Le:
      return a <= b;
    case Op::Gt:
      return a > b;
    case Op::Ge:
      return a >= b;
    case Op::Eq:
      return a == b;
    case Op::Ne:
      return a != b;
    default:
      return false;
  }
}

// ---------------------------------------------------------------------------
// Rule sets

namespace {

using CaseText = std::vector<std::pair<int, const char*>>;

std::vector<RuleCase> compile(const CaseText& cases) {
  std::vector<RuleCase> out;
  for (const auto& [code, text] : cases) out.push_back({code, Condition::parse(text)});
  return out;
}

// Hold (closed jaws) and contact (open jaws) for one grasper.
std::vector<RuleCase> interaction_cases(std::string_view g, std::string_view jaw) {
  const std::string gs(g);
  const std::string js(jaw);
  const std::string needle = "D(" + gs + ",N) < hold && " + js + "(" + gs + ")";
  const std::string thread = "Inter(" + gs + ",T) > 0 && " + js + "(" + gs + ")";
  return {{kNeedle, Condition::parse(needle)},
          {kThread, Condition::parse(thread)},
          {kNothing, Condition::parse("otherwise")}};
}

}  // namespace

RuleSet RuleSet::defaults(Task task) {
  RuleSet r;
  r.task_ = task;
  r.cases_[0] = interaction_cases("LG", "closed");
  r.cases_[1] = interaction_cases("LG", "open");
  r.cases_[2] = interaction_cases("RG", "closed");
  r.cases_[3] = interaction_cases("RG", "open");
  switch (task) {
    case Task::Suturing:
    case Task::NeedlePassing: {
      const std::string t = task == Task::Suturing ? "Ts" : "R";
      const std::string in = "Inter(" + t + ",N) > 0 && N.x < " + t + ".x";
      const std::string touching = "(Inter(" + t + ",N) == 0 || N.x >= " + t +
                                   ".x) && (D(RG,T) > hold || D(LG,N) > hold)";
      r.cases_[4] = {{2, Condition::parse(in)},
                     {1, Condition::parse(touching)},
                     {0, Condition::parse("otherwise")}};
      break;
    }
    case Task::KnotTying:
      r.cases_[4] = compile({
          {2, "Loop(T) >= area && Inter(LG,T) > 0 && closed(LG) && Inter(RG,T) > 0 && closed(RG)"},
          {1, "Loop(T) >= area"},
          {0, "otherwise"},
      });
      break;
  }
  return r;
}

void RuleSet::set_cases(int state, std::vector<RuleCase> cases) {
  if (state < 0 || state >= kNumStates) throw DataError("state index out of range");
  if (cases.empty() || !cases.back().when.unconditional()) {
    throw DataError(std::string(state_name(state)) + ": the last case must be 'otherwise'");
  }
  cases_[state] = std::move(cases);
}

int RuleSet::evaluate(int state, const FeatureVector& v) const {
  for (const RuleCase& c : cases_.at(state)) {
    if (c.when.evaluate(v, thresholds_)) return c.code;
  }
  return kNothing;
}

ContextState RuleSet::evaluate_all(const FeatureVector& v) const {
  ContextState s;
  s.task = task_;
  for (int i = 0; i < kNumStates; ++i) s.codes[i] = evaluate(i, v);
  return s;
}

std::vector<FeatureKey> RuleSet::required_features() const {
  std::vector<FeatureKey> out;
  for (const auto& cases : cases_) {
    for (const RuleCase& c : cases) {
      auto f = c.when.features();
      out.insert(out.end(), f.begin(), f.end());
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

RuleSet RuleSet::parse(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("rule set: ") + e.what());
  }
  if (!j.is_object() || !j.contains("task")) throw DataError("rule set: missing \"task\"");
  auto task = parse_task(j["task"].get<std::string>());
  if (!task) throw DataError("rule set: unknown task " + j["task"].dump());
  RuleSet r = defaults(*task);
  try {
    if (j.contains("thresholds")) {
      for (const auto& [name, value] : j["thresholds"].items()) {
        const double v = value.get<double>();
        if (name == "hold") {
          r.thresholds_.hold = v;
        } else if (name == "open_px") {
          r.thresholds_.open_px = v;
        } else if (name == "area") {
          r.thresholds_.area = v;
        } else {
          throw DataError("rule set: unknown threshold \"" + name + "\"");
        }
      }
    }
    if (j.contains("states")) {
      for (const auto& [name, list] : j["states"].items()) {
        int state = -1;
        for (int i = 0; i < kNumStates; ++i) {
          if (state_name(i) == name) state = i;
        }
        if (state < 0) throw DataError("rule set: unknown state \"" + name + "\"");
        std::vector<RuleCase> cases;
        for (const auto& c : list) {
          cases.push_back({c.at("code").get<int>(), Condition::parse(c.at("when").get<std::string>())});
        }
        r.set_cases(state, std::move(cases));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("rule set: ") + e.what());
  }
  return r;
}

RuleSet RuleSet::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open rule set " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string RuleSet::to_json() const {
  nlohmann::ordered_json j;
  j["task"] = std::string(task_name(task_));
  j["thresholds"] = {{"hold", thresholds_.hold},
                     {"open_px", thresholds_.open_px},
                     {"area", thresholds_.area}};
  nlohmann::ordered_json states = nlohmann::ordered_json::object();
  for (int i = 0; i < kNumStates; ++i) {
    nlohmann::ordered_json list = nlohmann::ordered_json::array();
    for (const RuleCase& c : cases_[i]) list.push_back({{"code", c.code}, {"when", c.when.source()}});
    states[std::string(state_name(i))] = list;
  }
  j["states"] = states;
  return j.dump(2);
}

}  // namespace surgctx
