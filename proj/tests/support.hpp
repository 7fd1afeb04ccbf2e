#pragma once

#include <filesystem>
#include <string>

#include "finforge/engine.hpp"
#include "finforge/serialize.hpp"

namespace finforge::test {

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(FINFORGE_DATA_DIR) / name;
}

inline void load_axioms(AxiomRegistry& reg) {
  for_each_jsonl(data_path("axioms.jsonl"),
                 [&](std::size_t, const nlohmann::json& j) { reg.register_axiom(json::decode_axiom(j)); });
}

inline void load_kb(KnowledgeBase& kb) {
  for_each_jsonl(data_path("kb_points.jsonl"),
                 [&](std::size_t, const nlohmann::json& j) { kb.add(json::decode_point(j)); });
}

inline void load_templates(TemplateRegistry& t) {
  for_each_jsonl(data_path("templates.jsonl"),
                 [&](std::size_t, const nlohmann::json& j) { t.add(json::decode_template(j)); });
}

inline std::vector<FormatRule> load_rules() {
  std::vector<FormatRule> rules;
  for_each_jsonl(data_path("format_rules.jsonl"),
                 [&](std::size_t, const nlohmann::json& j) { rules.push_back(compile_rule(j)); });
  return rules;
}

inline GroundTruthFactSet load_fact_set() {
  GroundTruthFactSet out;
  for_each_jsonl(data_path("fact_sets.jsonl"),
                 [&](std::size_t, const nlohmann::json& j) { out = json::decode_fact_set(j); });
  return out;
}

inline Scenario load_scenario(const std::string& id) {
  std::optional<Scenario> out;
  for_each_jsonl(data_path("scenarios.jsonl"), [&](std::size_t, const nlohmann::json& j) {
    if (j.at("id") == id) out = json::decode_scenario(j);
  });
  if (!out) throw Error(ErrorCode::not_found, id);
  return *out;
}

inline std::string fixed_clock() { return "2026-01-01T00:00:00Z"; }

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("finforge-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Commentary on the non-recurring items case; each figure appears once so
// one-to-one fact matching can reach 1.0.
inline const char* kNonRecurringCommentary =
    "Non-recurring items totalled 21,193,050.28 CNY, while net profit attributable to shareholders "
    "was 181,662,559.98 CNY, so non-recurring items contributed about 11.67% of net profit.\n\n"
    "Net profit excluding non-recurring items grew by 92.68% YoY, ahead of the headline net profit "
    "growth of 56.89%, which points to a recovery in the core business.";

}  // namespace finforge::test
