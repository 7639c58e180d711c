#include "surgctx/run_config.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "surgctx/error.hpp"

namespace surgctx {

std::vector<ObjectClass> effective_classes(const RunConfig& c) {
  if (!c.classes.empty()) return c.classes;
  const auto span = task_classes(c.task);
  return {span.begin(), span.end()};
}

RuleSet effective_rules(const RunConfig& c) {
  RuleSet rules = c.rules_path.empty() ? RuleSet::defaults(c.task) : RuleSet::load(c.rules_path);
  if (rules.task() != c.task) {
    throw DataError("rule set " + c.rules_path + " is for " + std::string(task_name(rules.task())) +
                    ", not " + std::string(task_name(c.task)));
  }
  rules.thresholds() = c.thresholds;
  return rules;
}

std::string to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["task"] = std::string(task_name(c.task));
  nlohmann::ordered_json classes = nlohmann::ordered_json::array();
  for (ObjectClass cls : c.classes) classes.push_back(std::string(directory_name(cls)));
  j["classes"] = classes;
  j["init_mode"] = std::string(init_mode_name(c.init_mode));
  j["init_image"] = c.init_image;
  j["init_mask"] = c.init_mask;
  j["thresholds"] = {{"hold", c.thresholds.hold},
                     {"open_px", c.thresholds.open_px},
                     {"area", c.thresholds.area}};
  j["rules"] = c.rules_path;
  j["batch_size"] = c.batch.batch_size;
  j["rate"] = c.batch.source_rate;
  if (c.bank_capacity) {
    j["bank_capacity"] = *c.bank_capacity;
  } else {
    j["bank_capacity"] = nullptr;
  }
  j["encoder"] = c.encoder == EncoderKind::Toy ? "toy" : "external-features";
  j["stride"] = c.stride;
  j["features_dir"] = c.features_dir;
  j["input"] = c.input;
  j["output"] = c.output;
  j["seed"] = c.seed;
  return j.dump(2);
}

RunConfig parse_run_config(const std::string& json_text) {
  RunConfig c;
  try {
    const nlohmann::json j = nlohmann::json::parse(json_text);
    if (j.contains("task")) {
      auto t = parse_task(j["task"].get<std::string>());
      if (!t) throw DataError("config: unknown task " + j["task"].dump());
      c.task = *t;
    }
    if (j.contains("classes")) {
      for (const auto& name : j["classes"]) {
        auto cls = parse_object_class(name.get<std::string>());
        if (!cls) throw DataError("config: unknown class " + name.dump());
        c.classes.push_back(*cls);
      }
    }
    if (j.contains("init_mode")) {
      auto m = parse_init_mode(j["init_mode"].get<std::string>());
      if (!m) throw DataError("config: unknown init mode " + j["init_mode"].dump());
      c.init_mode = *m;
    }
    c.init_image = j.value("init_image", c.init_image);
    c.init_mask = j.value("init_mask", c.init_mask);
    if (j.contains("thresholds")) {
      const auto& t = j["thresholds"];
      c.thresholds.hold = t.value("hold", c.thresholds.hold);
      c.thresholds.open_px = t.value("open_px", c.thresholds.open_px);
      c.thresholds.area = t.value("area", c.thresholds.area);
    }
    c.rules_path = j.value("rules", c.rules_path);
    c.batch.batch_size = j.value("batch_size", c.batch.batch_size);
    c.batch.source_rate = j.value("rate", c.batch.source_rate);
    if (j.contains("bank_capacity") && !j["bank_capacity"].is_null()) {
      c.bank_capacity = j["bank_capacity"].get<std::size_t>();
    }
    if (j.contains("encoder")) {
      const std::string e = j["encoder"].get<std::string>();
      if (e == "toy") {
        c.encoder = EncoderKind::Toy;
      } else if (e == "external-features") {
        c.encoder = EncoderKind::ExternalFeatures;
      } else {
        throw DataError("config: unknown encoder '" + e + "'");
      }
    }
    c.stride = j.value("stride", c.stride);
    c.features_dir = j.value("features_dir", c.features_dir);
    c.input = j.value("input", c.input);
    c.output = j.value("output", c.output);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("config: ") + e.what());
  }
  if (c.batch.batch_size <= 0) throw DataError("config: batch_size must be positive");
  if (!(c.batch.source_rate > 0.0)) throw DataError("config: rate must be positive");
  if (c.stride <= 0) throw DataError("config: stride must be positive");
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

}  // namespace surgctx
