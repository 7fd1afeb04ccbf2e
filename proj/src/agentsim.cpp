#include "finforge/agentsim.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <set>

#include "finforge/ruleverify.hpp"

namespace finforge {

namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

bool is_date(const std::string& s) {
  static const std::regex re(R"(\d{4}-(0[1-9]|1[0-2])-(0[1-9]|[12]\d|3[01]))");
  return std::regex_match(s, re);
}

std::string json_scalar_text(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

}  // namespace

void ToolSpec::validate() const {
  if (name.empty()) throw Error(ErrorCode::invalid_argument, "tool without a name");
  std::set<std::string> names;
  for (const auto& p : params) {
    if (!names.insert(p.name).second) {
      throw Error(ErrorCode::invalid_argument, "tool " + name + " declares param '" + p.name + "' twice");
    }
    if (p.type == ParamType::enumeration && p.values.empty()) {
      throw Error(ErrorCode::invalid_argument, "enum param '" + p.name + "' of tool " + name + " has no values");
    }
  }
  if (const auto* lookup = std::get_if<LookupBehavior>(&behavior)) {
    if (lookup->key_params.empty()) {
      throw Error(ErrorCode::invalid_argument, "lookup tool " + name + " has no key params");
    }
    for (const auto& k : lookup->key_params) {
      if (!names.contains(k)) {
        throw Error(ErrorCode::invalid_argument, "lookup key '" + k + "' is not a param of tool " + name);
      }
    }
  } else {
    const auto& arith = std::get<ArithmeticBehavior>(behavior);
    if (!arith.expression.valid()) {
      throw Error(ErrorCode::invalid_argument, "arithmetic tool " + name + " has no expression");
    }
    for (const auto& s : expr::symbols(arith.expression)) {
      auto it = std::find_if(params.begin(), params.end(), [&](const auto& p) { return p.name == s; });
      if (it == params.end() || it->type != ParamType::number || !it->required) {
        throw Error(ErrorCode::invalid_argument,
                    "expression of tool " + name + " uses '" + s + "', which is not a required number param");
      }
    }
  }
}

std::vector<CallViolation> validate_tool_call(const ToolCall& call, const ToolSpec& spec) {
  if (call.name != spec.name) {
    throw Error(ErrorCode::not_found, "call to '" + call.name + "' checked against tool " + spec.name);
  }
  std::vector<CallViolation> out;
  if (!call.params.is_object()) {
    out.push_back({"", "type", "params must be an object"});
    return out;
  }
  for (const auto& p : spec.params) {
    if (!call.params.contains(p.name)) {
      if (p.required) out.push_back({p.name, "missing", "required param is absent"});
      continue;
    }
    const auto& v = call.params.at(p.name);
    switch (p.type) {
      case ParamType::number:
        if (!v.is_number()) out.push_back({p.name, "type", "expected a number"});
        break;
      case ParamType::string:
        if (!v.is_string()) out.push_back({p.name, "type", "expected a string"});
        break;
      case ParamType::date:
        if (!v.is_string()) {
          out.push_back({p.name, "type", "expected a date string"});
        } else if (!is_date(v.get<std::string>())) {
          out.push_back({p.name, "type", "expected YYYY-MM-DD"});
        }
        break;
      case ParamType::enumeration:
        if (!v.is_string()) {
          out.push_back({p.name, "type", "expected one of the enum values"});
        } else if (std::find(p.values.begin(), p.values.end(), v.get<std::string>()) == p.values.end()) {
          out.push_back({p.name, "enum", "'" + v.get<std::string>() + "' is not an allowed value"});
        }
        break;
    }
  }
  if (spec.strict_params) {
    for (const auto& [k, _] : call.params.items()) {
      const bool known = std::any_of(spec.params.begin(), spec.params.end(),
                                     [&](const auto& p) { return p.name == k; });
      if (!known) out.push_back({k, "unknown", "param is not declared by the tool"});
    }
  }
  return out;
}

std::vector<CallViolation> validate_tool_call(const ToolCall& call, std::span<const ToolSpec> tools) {
  for (const auto& t : tools) {
    if (t.name == call.name) return validate_tool_call(call, t);
  }
  throw Error(ErrorCode::not_found, "unknown tool '" + call.name + "'");
}

nlohmann::json execute_tool(const ToolSpec& spec, const ToolCall& call) {
  const auto violations = validate_tool_call(call, spec);
  if (!violations.empty()) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& v : violations) {
      list.push_back({{"param", v.param}, {"kind", v.kind}, {"note", v.note}});
    }
    return {{"error", "invalid_call"}, {"violations", list}};
  }
  if (const auto* lookup = std::get_if<LookupBehavior>(&spec.behavior)) {
    std::string key;
    for (std::size_t i = 0; i < lookup->key_params.size(); ++i) {
      if (i > 0) key += "|";
      if (call.params.contains(lookup->key_params[i])) {
        key += json_scalar_text(call.params.at(lookup->key_params[i]));
      }
    }
    auto it = lookup->table.find(key);
    if (it == lookup->table.end()) return {{"error", "not_found"}, {"key", key}};
    return it->second;
  }
  const auto& arith = std::get<ArithmeticBehavior>(spec.behavior);
  expr::Bindings bound;
  for (const auto& [k, v] : call.params.items()) {
    if (v.is_number()) bound[k] = v.get<double>();
  }
  const double value = expr::evaluate(arith.expression, bound);
  if (!std::isfinite(value)) return {{"error", "undefined"}};
  return {{arith.output_field, value}};
}

void Scenario::validate() const {
  if (id.empty()) throw Error(ErrorCode::invalid_argument, "scenario without id");
  if (optimal_steps < 1) {
    throw Error(ErrorCode::invalid_argument, "scenario " + id.str() + " needs optimal_steps >= 1");
  }
  std::set<std::string> names;
  for (const auto& t : available_tools) {
    t.validate();
    if (!names.insert(t.name).second) {
      throw Error(ErrorCode::invalid_argument, "scenario " + id.str() + " lists tool " + t.name + " twice");
    }
  }
  for (const auto& k : gold_depends_on) {
    if (!hidden_facts.contains(k) && !visible_facts.contains(k)) {
      throw Error(ErrorCode::invalid_argument,
                  "scenario " + id.str() + " gold depends on unknown fact '" + k + "'");
    }
  }
  for (const auto& c : reference_calls) {
    if (tool(c.name) == nullptr) {
      throw Error(ErrorCode::invalid_argument,
                  "reference call of scenario " + id.str() + " names unknown tool " + c.name);
    }
  }
  if (requires_tool && available_tools.empty()) {
    throw Error(ErrorCode::invalid_argument, "scenario " + id.str() + " requires a tool but offers none");
  }
}

const ToolSpec* Scenario::tool(std::string_view name) const {
  for (const auto& t : available_tools) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

std::size_t Trajectory::agent_steps() const {
  std::size_t n = final_answer ? 1 : 0;
  for (const auto& s : steps) {
    if (s.kind == StepKind::assistant_msg || s.kind == StepKind::tool_call) ++n;
  }
  return n;
}

std::size_t Trajectory::tool_calls() const {
  return static_cast<std::size_t>(std::count_if(
      steps.begin(), steps.end(), [](const auto& s) { return s.kind == StepKind::tool_call; }));
}

void Trajectory::validate() const {
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (steps[i].kind == StepKind::tool_result &&
        (i == 0 || steps[i - 1].kind != StepKind::tool_call)) {
      throw Error(ErrorCode::malformed, "tool_result at step " + std::to_string(i) +
                                            " does not follow a tool_call");
    }
  }
}

namespace {

std::string latest_reply_value(const Trajectory& t) {
  for (auto it = t.steps.rbegin(); it != t.steps.rend(); ++it) {
    if (it->kind != StepKind::user_reply) continue;
    std::string line = it->text.substr(0, it->text.find('\n'));
    const auto colon = line.find(": ");
    return colon == std::string::npos ? line : line.substr(colon + 2);
  }
  return {};
}

const nlohmann::json* latest_result(const Trajectory& t) {
  for (auto it = t.steps.rbegin(); it != t.steps.rend(); ++it) {
    if (it->kind == StepKind::tool_result) return &it->record;
  }
  return nullptr;
}

std::string substitute(std::string text, const Trajectory& t) {
  const std::string reply_tag = "{{reply}}";
  for (auto pos = text.find(reply_tag); pos != std::string::npos; pos = text.find(reply_tag, pos)) {
    const std::string v = latest_reply_value(t);
    text.replace(pos, reply_tag.size(), v);
    pos += v.size();
  }
  const std::string result_tag = "{{result.";
  for (auto pos = text.find(result_tag); pos != std::string::npos; pos = text.find(result_tag, pos)) {
    const auto close = text.find("}}", pos);
    if (close == std::string::npos) break;
    const std::string field = text.substr(pos + result_tag.size(), close - pos - result_tag.size());
    std::string v;
    if (const auto* r = latest_result(t); r != nullptr && r->is_object() && r->contains(field)) {
      v = json_scalar_text(r->at(field));
    }
    text.replace(pos, close + 2 - pos, v);
    pos += v.size();
  }
  return text;
}

bool names_fact(const std::string& lowered_msg, const std::string& key, const HiddenFact& fact) {
  if (lowered_msg.find(lowercase(key)) != std::string::npos) return true;
  return std::any_of(fact.aliases.begin(), fact.aliases.end(), [&](const auto& a) {
    return lowered_msg.find(lowercase(a)) != std::string::npos;
  });
}

}  // namespace

std::optional<AgentAction> ScriptedDriver::next(const Scenario&, const Trajectory& so_far) {
  const std::size_t pos = so_far.agent_steps();
  if (pos >= script_.size()) return std::nullopt;
  AgentAction action = script_[pos];
  action.text = substitute(action.text, so_far);
  if (action.kind == AgentAction::Kind::tool_call && action.call.params.is_object()) {
    for (auto& [k, v] : action.call.params.items()) {
      if (v.is_string()) v = substitute(v.get<std::string>(), so_far);
    }
  }
  return action;
}

Trajectory run_scenario(const Scenario& scenario, AgentDriver& driver, std::size_t step_budget) {
  Trajectory traj;
  traj.scenario = scenario.id;
  while (traj.agent_steps() < step_budget) {
    auto action = driver.next(scenario, traj);
    if (!action) break;
    switch (action->kind) {
      case AgentAction::Kind::final_answer:
        traj.final_answer = action->text;
        return traj;
      case AgentAction::Kind::message: {
        traj.steps.push_back(Step{StepKind::assistant_msg, action->text, {}, {}});
        const std::string lowered = lowercase(action->text);
        std::string reply;
        for (const auto& [key, fact] : scenario.hidden_facts) {
          if (!names_fact(lowered, key, fact)) continue;
          if (!reply.empty()) reply += "\n";
          reply += key + ": " + fact.value;
        }
        if (reply.empty()) reply = "I have nothing to add.";
        traj.steps.push_back(Step{StepKind::user_reply, std::move(reply), {}, {}});
        break;
      }
      case AgentAction::Kind::tool_call: {
        traj.steps.push_back(Step{StepKind::tool_call, {}, action->call, {}});
        nlohmann::json record;
        if (const ToolSpec* spec = scenario.tool(action->call.name)) {
          record = execute_tool(*spec, action->call);
        } else {
          record = {{"error", "unknown_tool"}, {"name", action->call.name}};
        }
        traj.steps.push_back(Step{StepKind::tool_result, {}, {}, std::move(record)});
        break;
      }
    }
  }
  traj.truncated = true;
  return traj;
}

void AgenticWeights::validate() const {
  for (double w : {answer, necessity, efficiency, params}) {
    if (!(w >= 0.0 && w <= 1.0)) throw Error(ErrorCode::invalid_argument, "agentic weights must lie in [0,1]");
  }
  if (std::fabs(answer + necessity + efficiency + params - 1.0) > 1e-9) {
    throw Error(ErrorCode::invalid_argument, "agentic weights must sum to 1");
  }
}

bool clarified(const Trajectory& traj, const Scenario& scenario, const std::string& key) {
  auto it = scenario.hidden_facts.find(key);
  if (it == scenario.hidden_facts.end()) return true;  // visible facts need no clarification
  for (const auto& s : traj.steps) {
    if (s.kind == StepKind::assistant_msg && names_fact(lowercase(s.text), key, it->second)) return true;
  }
  return false;
}

namespace {

bool matches_reference(const ToolCall& call, const ToolCall& ref) {
  if (call.name != ref.name) return false;
  for (const auto& [k, v] : ref.params.items()) {
    if (!call.params.contains(k)) return false;
    const auto& got = call.params.at(k);
    if (v.is_number() && got.is_number()) {
      const double a = v.get<double>();
      const double b = got.get<double>();
      if (std::fabs(a - b) > 1e-9 * std::max(1.0, std::fabs(a))) return false;
    } else if (got != v) {
      return false;
    }
  }
  return true;
}

}  // namespace

AgenticScore score_trajectory(const Trajectory& traj, const Scenario& scenario,
                              const AgenticWeights& weights) {
  weights.validate();
  if (traj.scenario != scenario.id) {
    throw Error(ErrorCode::invalid_argument, "trajectory of scenario " + traj.scenario.str() +
                                                 " scored against scenario " + scenario.id.str());
  }
  traj.validate();

  AgenticScore s;
  bool gated = true;
  for (const auto& key : scenario.gold_depends_on) gated = gated && clarified(traj, scenario, key);
  s.answer_correct =
      traj.final_answer && gated && match_answer(*traj.final_answer, scenario.gold) ? 1.0 : 0.0;

  const std::size_t calls = traj.tool_calls();
  double necessity = 1.0;
  if (calls > 0 && !scenario.requires_tool) necessity -= 1.0;
  if (calls == 0 && scenario.requires_tool) necessity -= 1.0;
  s.tool_necessity = std::clamp(necessity, 0.0, 1.0);

  const std::size_t actual = traj.agent_steps();
  s.efficiency = actual == 0 ? 0.0
                             : std::min(1.0, static_cast<double>(scenario.optimal_steps) /
                                                 static_cast<double>(actual));

  std::vector<const ToolCall*> distinct;
  for (const auto& st : traj.steps) {
    if (st.kind != StepKind::tool_call) continue;
    if (std::none_of(distinct.begin(), distinct.end(), [&](const ToolCall* c) { return *c == st.call; })) {
      distinct.push_back(&st.call);
    }
  }
  if (distinct.empty()) {
    s.param_accuracy = scenario.requires_tool ? 0.0 : 1.0;
  } else {
    std::size_t valid = 0;
    for (const ToolCall* c : distinct) {
      const ToolSpec* spec = scenario.tool(c->name);
      if (spec == nullptr || !validate_tool_call(*c, *spec).empty()) continue;
      bool has_ref = false;
      bool ok = false;
      for (const auto& ref : scenario.reference_calls) {
        if (ref.name != c->name) continue;
        has_ref = true;
        ok = ok || matches_reference(*c, ref);
      }
      if (!has_ref || ok) ++valid;
    }
    s.param_accuracy = static_cast<double>(valid) / static_cast<double>(distinct.size());
  }

  s.scalar = weights.answer * s.answer_correct + weights.necessity * s.tool_necessity +
             weights.efficiency * s.efficiency + weights.params * s.param_accuracy;
  return s;
}

}  // namespace finforge
