#include "finforge/serialize.hpp"

namespace finforge::json {

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::malformed, what); }

const json& at(const json& j, const std::string& key) {
  if (!j.is_object()) bad("expected a JSON object");
  auto it = j.find(key);
  if (it == j.end()) bad("missing field '" + key + "'");
  return *it;
}

bool has(const json& j, const std::string& key) {
  return j.is_object() && j.contains(key) && !j.at(key).is_null();
}

std::string get_string(const json& j, const std::string& key) {
  const auto& v = at(j, key);
  if (!v.is_string()) bad("field '" + key + "' must be a string");
  return v.get<std::string>();
}

std::string opt_string(const json& j, const std::string& key, std::string def = {}) {
  return has(j, key) ? get_string(j, key) : std::move(def);
}

double get_number(const json& j, const std::string& key) {
  const auto& v = at(j, key);
  if (!v.is_number()) bad("field '" + key + "' must be a number");
  return v.get<double>();
}

double opt_number(const json& j, const std::string& key, double def) {
  return has(j, key) ? get_number(j, key) : def;
}

long long get_int(const json& j, const std::string& key) {
  const auto& v = at(j, key);
  if (!v.is_number_integer()) bad("field '" + key + "' must be an integer");
  return v.get<long long>();
}

int opt_int(const json& j, const std::string& key, int def) {
  return has(j, key) ? static_cast<int>(get_int(j, key)) : def;
}

bool get_bool(const json& j, const std::string& key) {
  const auto& v = at(j, key);
  if (!v.is_boolean()) bad("field '" + key + "' must be a boolean");
  return v.get<bool>();
}

bool opt_bool(const json& j, const std::string& key, bool def) {
  return has(j, key) ? get_bool(j, key) : def;
}

const json& get_array(const json& j, const std::string& key) {
  const auto& v = at(j, key);
  if (!v.is_array()) bad("field '" + key + "' must be an array");
  return v;
}

const json& get_object(const json& j, const std::string& key) {
  const auto& v = at(j, key);
  if (!v.is_object()) bad("field '" + key + "' must be an object");
  return v;
}

std::vector<std::string> opt_strings(const json& j, const std::string& key) {
  std::vector<std::string> out;
  if (!has(j, key)) return out;
  for (const auto& v : get_array(j, key)) {
    if (!v.is_string()) bad("field '" + key + "' must hold strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

std::map<std::string, std::string> opt_string_map(const json& j, const std::string& key) {
  std::map<std::string, std::string> out;
  if (!has(j, key)) return out;
  for (const auto& [k, v] : get_object(j, key).items()) {
    if (v.is_string()) {
      out[k] = v.get<std::string>();
    } else if (v.is_number() || v.is_boolean()) {
      out[k] = v.dump();
    } else {
      bad("field '" + key + "." + k + "' must be a scalar");
    }
  }
  return out;
}

std::map<std::string, double> number_map(const json& j, const std::string& key) {
  std::map<std::string, double> out;
  for (const auto& [k, v] : get_object(j, key).items()) {
    if (!v.is_number()) bad("field '" + key + "." + k + "' must be a number");
    out[k] = v.get<double>();
  }
  return out;
}

template <NamedEnum E>
E get_enum(const json& j, const std::string& key) {
  const std::string text = get_string(j, key);
  try {
    return parse_enum<E>(text);
  } catch (const Error& e) {
    bad("field '" + key + "': " + e.what());
  }
}

template <NamedEnum E>
E opt_enum(const json& j, const std::string& key, E def) {
  return has(j, key) ? get_enum<E>(j, key) : def;
}

template <NamedEnum E>
std::string name(E e) {
  return std::string(enum_name(e));
}

}  // namespace

json encode_payload(const GoldPayload& payload) {
  return std::visit(
      [](const auto& p) -> json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, NumericGold>) {
          return {{"type", "numeric"}, {"value", p.value}, {"tol_abs", p.tol_abs}, {"tol_rel", p.tol_rel}};
        } else if constexpr (std::is_same_v<T, TextGold>) {
          return {{"type", "exact_text"}, {"normalized", p.normalized}};
        } else if constexpr (std::is_same_v<T, FactSetGold>) {
          return {{"type", "fact_set"}, {"fact_set_id", p.fact_set_id}};
        } else {
          return {{"type", "rubric"}, {"criteria", p.criteria}};
        }
      },
      payload);
}

GoldPayload decode_payload(const json& j) {
  const std::string type = get_string(j, "type");
  if (type == "numeric") {
    NumericGold g{get_number(j, "value"), opt_number(j, "tol_abs", 0.0), opt_number(j, "tol_rel", 1e-4)};
    if (g.tol_abs < 0 || g.tol_rel < 0) bad("numeric gold tolerances must be non-negative");
    return g;
  }
  if (type == "exact_text") {
    if (has(j, "normalized")) return TextGold{get_string(j, "normalized")};
    return TextGold{normalize_text_answer(get_string(j, "text"))};
  }
  if (type == "fact_set") return FactSetGold{get_string(j, "fact_set_id")};
  if (type == "rubric") return RubricGold{get_string(j, "criteria")};
  bad("unknown gold payload type '" + type + "'");
}

json encode(const GoldAnswer& gold) {
  return {{"payload", encode_payload(gold.payload())},
          {"method", name(gold.method())},
          {"confidence", name(gold.confidence())}};
}

GoldAnswer decode_gold(const json& j) {
  GoldAnswer g(decode_payload(get_object(j, "payload")), get_enum<GoldMethod>(j, "method"));
  if (has(j, "confidence") && get_enum<GoldConfidence>(j, "confidence") != g.confidence()) {
    bad("gold confidence does not match its method");
  }
  return g;
}

json encode(const EvolutionStrategy& s) { return {{"kind", name(s.kind)}, {"params", s.params}}; }

EvolutionStrategy decode_strategy(const json& j) {
  return {get_enum<EvolutionKind>(j, "kind"), opt_string_map(j, "params")};
}

json encode(const AxiomProvenance& p) {
  return {{"type", "axiom"},
          {"axiom_id", p.axiom.str()},
          {"hidden_symbol", p.hidden_symbol},
          {"sampled_values", p.sampled_values}};
}

AxiomProvenance decode_axiom_provenance(const json& j) {
  return {AxiomId(get_string(j, "axiom_id")), get_string(j, "hidden_symbol"),
          number_map(j, "sampled_values")};
}

json encode(const Provenance& p) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, AxiomProvenance>) {
          return encode(v);
        } else if constexpr (std::is_same_v<T, KnowledgeProvenance>) {
          json ids = json::array();
          for (const auto& id : v.points) ids.push_back(id.str());
          return {{"type", "knowledge"}, {"point_ids", ids}, {"template_id", v.template_id.str()}};
        } else {
          return {{"type", "evolved"}, {"parent_id", v.parent.str()}, {"strategy", encode(v.strategy)}};
        }
      },
      p);
}

Provenance decode_provenance(const json& j) {
  const std::string type = get_string(j, "type");
  if (type == "axiom") return decode_axiom_provenance(j);
  if (type == "knowledge") {
    KnowledgeProvenance k;
    for (const auto& id : opt_strings(j, "point_ids")) k.points.emplace_back(id);
    k.template_id = TemplateId(get_string(j, "template_id"));
    return k;
  }
  if (type == "evolved") {
    return EvolvedProvenance{TaskId(get_string(j, "parent_id")), decode_strategy(get_object(j, "strategy"))};
  }
  bad("unknown provenance type '" + type + "'");
}

json encode(const VerificationProgram& p) {
  return {{"language", p.language},   {"source", p.source},   {"inputs", p.inputs},
          {"output_scale", p.output_scale}, {"tol_abs", p.tol_abs}, {"tol_rel", p.tol_rel}};
}

VerificationProgram decode_program(const json& j) {
  VerificationProgram p;
  p.language = opt_string(j, "language", "python3");
  p.source = get_string(j, "source");
  p.inputs = opt_string_map(j, "inputs");
  p.output_scale = opt_number(j, "output_scale", 1.0);
  p.tol_abs = opt_number(j, "tol_abs", 0.0);
  p.tol_rel = opt_number(j, "tol_rel", 1e-6);
  return p;
}

json encode(const InstructionTask& t) {
  json j{{"id", t.id.str()},
         {"task_type", name(t.task_type)},
         {"domain", name(t.domain)},
         {"prompt", t.prompt},
         {"context_docs", t.context_docs},
         {"provenance", encode(t.provenance)},
         {"verification_level", name(t.level)},
         {"format", name(t.format)},
         {"options", t.options},
         {"tags", t.tags},
         {"expected_themes", t.expected_themes}};
  if (t.derivation) j["derivation"] = encode(*t.derivation);
  if (t.gold) j["gold"] = encode(*t.gold);
  if (t.program) j["program"] = encode(*t.program);
  return j;
}

InstructionTask decode_task(const json& j) {
  InstructionTask t;
  t.id = TaskId(opt_string(j, "id"));
  t.task_type = get_enum<TaskType>(j, "task_type");
  t.domain = opt_enum<DomainTag>(j, "domain", DomainTag::accounting);
  t.prompt = get_string(j, "prompt");
  t.context_docs = opt_strings(j, "context_docs");
  t.provenance = decode_provenance(get_object(j, "provenance"));
  if (has(j, "derivation")) t.derivation = decode_axiom_provenance(get_object(j, "derivation"));
  if (has(j, "gold")) t.gold = decode_gold(get_object(j, "gold"));
  t.level = opt_enum<VerificationLevel>(j, "verification_level", VerificationLevel::unverified);
  t.format = opt_enum<AnswerFormat>(j, "format", AnswerFormat::open);
  t.options = opt_strings(j, "options");
  t.tags = opt_strings(j, "tags");
  t.expected_themes = opt_strings(j, "expected_themes");
  if (has(j, "program")) t.program = decode_program(get_object(j, "program"));
  if (std::holds_alternative<AxiomProvenance>(t.provenance)) {
    if (!t.gold) bad("axiom-provenance task '" + t.id.str() + "' must carry a gold answer");
    if (!t.derivation) t.derivation = std::get<AxiomProvenance>(t.provenance);
  }
  if (t.prompt.empty()) bad("task prompt must not be empty");
  return t;
}

json encode(const KnowledgePoint& p) {
  return {{"id", p.id.str()}, {"domain", name(p.domain)}, {"content", p.content},
          {"source_ref", p.source_ref}, {"tags", p.tags}};
}

KnowledgePoint decode_point(const json& j) {
  KnowledgePoint p;
  p.id = PointId(get_string(j, "id"));
  p.domain = get_enum<DomainTag>(j, "domain");
  p.content = get_string(j, "content");
  p.source_ref = opt_string(j, "source_ref");
  p.tags = opt_strings(j, "tags");
  return p;
}

json encode(const FinancialAxiom& a) {
  json vars = json::array();
  for (const auto& v : a.variables) {
    vars.push_back({{"symbol", v.symbol},
                    {"label", v.label},
                    {"unit", name(v.unit)},
                    {"range", {v.range.lo, v.range.hi}},
                    {"sign", name(v.sign)}});
  }
  json j{{"id", a.id.str()},
         {"name", a.name},
         {"domain", name(a.domain)},
         {"variables", vars},
         {"relation", expr::to_prefix(a.relation)},
         {"tags", a.tags}};
  if (a.harder_variant) j["harder_variant"] = a.harder_variant->str();
  return j;
}

FinancialAxiom decode_axiom(const json& j) {
  FinancialAxiom a;
  a.id = AxiomId(get_string(j, "id"));
  a.name = opt_string(j, "name", a.id.str());
  a.domain = opt_enum<DomainTag>(j, "domain", DomainTag::accounting);
  for (const auto& v : get_array(j, "variables")) {
    AxiomVariable var;
    var.symbol = get_string(v, "symbol");
    var.label = opt_string(v, "label");
    var.unit = get_enum<VarUnit>(v, "unit");
    const auto& r = get_array(v, "range");
    if (r.size() != 2 || !r[0].is_number() || !r[1].is_number()) bad("range must be [lo, hi]");
    var.range = {r[0].get<double>(), r[1].get<double>()};
    var.sign = opt_enum<SignConstraint>(v, "sign", SignConstraint::any);
    a.variables.push_back(std::move(var));
  }
  a.relation = expr::parse_relation(get_string(j, "relation"));
  if (has(j, "harder_variant")) a.harder_variant = AxiomId(get_string(j, "harder_variant"));
  a.tags = opt_strings(j, "tags");
  return a;
}

json encode(const InstructionTemplate& t) {
  return {{"id", t.id.str()}, {"task_type", name(t.task_type)}, {"text", t.text},
          {"question", t.question}, {"tags", t.tags}, {"themes", t.themes}};
}

InstructionTemplate decode_template(const json& j) {
  InstructionTemplate t;
  t.id = TemplateId(get_string(j, "id"));
  t.task_type = get_enum<TaskType>(j, "task_type");
  t.text = get_string(j, "text");
  t.question = opt_string(j, "question");
  t.tags = opt_strings(j, "tags");
  t.themes = opt_strings(j, "themes");
  return t;
}

json encode(const Fact& f) {
  json j{{"metric", f.metric}, {"value", f.value}, {"unit", to_string(f.unit)}};
  if (f.period) j["period"] = *f.period;
  return j;
}

Fact decode_fact(const json& j) {
  Fact f;
  f.metric = get_string(j, "metric");
  f.value = get_number(j, "value");
  f.unit = parse_unit(opt_string(j, "unit", "plain"));
  if (has(j, "period")) f.period = get_string(j, "period");
  return f;
}

GroundTruthFactSet decode_fact_set(const json& j) {
  GroundTruthFactSet s(get_string(j, "id"));
  for (const auto& f : get_array(j, "facts")) s.add(decode_fact(f));
  return s;
}

json encode(const GroundTruthFactSet& s) {
  json facts = json::array();
  for (const auto& f : s.facts()) facts.push_back(encode(f));
  return {{"id", s.id()}, {"facts", facts}};
}

json encode(const VerificationRecord& r) {
  return {{"task_id", r.task_id.str()},
          {"level", name(r.level)},
          {"evidence", r.evidence},
          {"timestamp", r.timestamp}};
}

VerificationRecord decode_record(const json& j) {
  VerificationRecord r;
  r.task_id = TaskId(get_string(j, "task_id"));
  r.level = get_enum<VerificationLevel>(j, "level");
  r.evidence = at(j, "evidence");
  if (r.evidence.is_null() || r.evidence.empty()) bad("verification evidence must not be empty");
  r.timestamp = opt_string(j, "timestamp");
  return r;
}

json encode(const AdjudicationItem& item) {
  json cands = json::array();
  for (const auto& c : item.candidate_answers) {
    cands.push_back({{"source_model", c.source_model}, {"answer", c.answer}});
  }
  json j{{"id", item.id.str()},
         {"task_id", item.task_id.str()},
         {"candidate_answers", cands},
         {"disagreement_summary", item.disagreement_summary},
         {"status", name(item.status)},
         {"created_at", item.created_at}};
  if (item.resolution) {
    j["resolution"] = {{"gold", encode(item.resolution->gold)},
                       {"expert_id", item.resolution->expert_id},
                       {"resolved_at", item.resolution->resolved_at}};
  }
  return j;
}

AdjudicationItem decode_item(const json& j) {
  AdjudicationItem item;
  item.id = ItemId(get_string(j, "id"));
  item.task_id = TaskId(get_string(j, "task_id"));
  for (const auto& c : get_array(j, "candidate_answers")) {
    item.candidate_answers.push_back({get_string(c, "source_model"), get_string(c, "answer")});
  }
  item.disagreement_summary = opt_string(j, "disagreement_summary");
  item.status = get_enum<AdjudicationStatus>(j, "status");
  item.created_at = opt_string(j, "created_at");
  if (has(j, "resolution")) {
    const auto& r = get_object(j, "resolution");
    item.resolution = Resolution{decode_gold(get_object(r, "gold")), get_string(r, "expert_id"),
                                 opt_string(r, "resolved_at")};
  }
  if ((item.status == AdjudicationStatus::resolved) != item.resolution.has_value()) {
    bad("adjudication status and resolution disagree");
  }
  return item;
}

json encode(const CandidateResponse& r) {
  return {{"source_model", r.source_model}, {"answer", r.answer}, {"reasoning", r.reasoning}};
}

CandidateResponse decode_response(const json& j) {
  if (has(j, "output")) {
    return CandidateResponse::from_output(opt_string(j, "source_model"), get_string(j, "output"));
  }
  return {opt_string(j, "source_model"), get_string(j, "answer"), opt_string(j, "reasoning")};
}

json encode(const VoteConfig& c) {
  return {{"min_responses", c.min_responses},
          {"agree_fraction", c.agree_fraction},
          {"require_reasoning_consistency", c.require_reasoning_consistency}};
}

VoteConfig decode_vote_config(const json& j) {
  VoteConfig c;
  c.min_responses = opt_int(j, "min_responses", c.min_responses);
  c.agree_fraction = opt_number(j, "agree_fraction", c.agree_fraction);
  c.require_reasoning_consistency =
      opt_bool(j, "require_reasoning_consistency", c.require_reasoning_consistency);
  c.validate();
  return c;
}

namespace {

json encode_route(const RouteEntry& r) {
  json kinds = json::array();
  for (auto k : r.judge_kinds) kinds.push_back(name(k));
  return {{"rule_weight", r.rule_weight}, {"judge_weight", r.judge_weight}, {"judge_kinds", kinds}};
}

json encode_components(const ComponentWeights& w) { return {{"rule", w.rule}, {"judge", w.judge}}; }

}  // namespace

json encode(const RewardBreakdown& b) {
  return {{"task_type", name(b.task_type)},
          {"scalar", b.scalar},
          {"components", b.components},
          {"routing", encode_route(b.routing_used)},
          {"weights", encode_components(b.weights_used)},
          {"audit", b.audit}};
}

json encode(const RuleVerdict& v) {
  json j{{"details", v.details}};
  if (v.fact_score) j["fact_score"] = *v.fact_score;
  if (v.format_score) j["format_score"] = *v.format_score;
  if (v.answer_match) j["answer_match"] = *v.answer_match;
  json viol = json::array();
  for (const auto& f : v.format_violations) {
    viol.push_back({{"rule_id", f.rule_id},
                    {"span", {f.span.begin, f.span.end}},
                    {"severity", name(f.severity)},
                    {"note", f.note}});
  }
  j["violations"] = viol;
  return j;
}

VerifierRouting decode_routing(const json& j, VerifierRouting base) {
  if (!j.is_object()) bad("routing must be an object keyed by task type");
  for (const auto& [k, v] : j.items()) {
    RouteEntry e;
    e.rule_weight = get_number(v, "rule_weight");
    e.judge_weight = get_number(v, "judge_weight");
    for (const auto& kind : opt_strings(v, "judge_kinds")) e.judge_kinds.insert(parse_enum<JudgeKind>(kind));
    base.set(parse_enum<TaskType>(k), e);
  }
  return base;
}

json encode(const VerifierRouting& r) {
  json j = json::object();
  for (const auto& [t, e] : r.entries()) j[name(t)] = encode_route(e);
  return j;
}

RewardWeights decode_weights(const json& j, RewardWeights base) {
  if (!j.is_object()) bad("weights must be an object keyed by task type");
  for (const auto& [k, v] : j.items()) {
    ComponentWeights w;
    if (has(v, "rule")) w.rule = number_map(v, "rule");
    if (has(v, "judge")) w.judge = number_map(v, "judge");
    base.set(parse_enum<TaskType>(k), w);
  }
  return base;
}

json encode(const RewardWeights& w) {
  json j = json::object();
  for (const auto& [t, c] : w.entries()) j[name(t)] = encode_components(c);
  return j;
}

json encode(const ToolSpec& t) {
  json params = json::array();
  for (const auto& p : t.params) {
    json pj{{"name", p.name}, {"type", name(p.type)}, {"required", p.required}};
    if (!p.values.empty()) pj["values"] = p.values;
    params.push_back(pj);
  }
  json behavior;
  if (const auto* l = std::get_if<LookupBehavior>(&t.behavior)) {
    behavior = {{"kind", "lookup"}, {"key_params", l->key_params}, {"table", l->table}};
  } else {
    const auto& a = std::get<ArithmeticBehavior>(t.behavior);
    behavior = {{"kind", "arithmetic"},
                {"output_field", a.output_field},
                {"expression", expr::to_prefix(a.expression)}};
  }
  return {{"name", t.name}, {"description", t.description}, {"params", params},
          {"behavior", behavior}, {"strict_params", t.strict_params}};
}

ToolSpec decode_tool(const json& j) {
  ToolSpec t;
  t.name = get_string(j, "name");
  t.description = opt_string(j, "description");
  for (const auto& p : get_array(j, "params")) {
    ToolParam tp;
    tp.name = get_string(p, "name");
    tp.type = get_enum<ParamType>(p, "type");
    tp.values = opt_strings(p, "values");
    tp.required = opt_bool(p, "required", true);
    t.params.push_back(std::move(tp));
  }
  const auto& b = get_object(j, "behavior");
  const std::string kind = get_string(b, "kind");
  if (kind == "lookup") {
    LookupBehavior l;
    l.key_params = opt_strings(b, "key_params");
    for (const auto& [k, v] : get_object(b, "table").items()) l.table[k] = v;
    t.behavior = std::move(l);
  } else if (kind == "arithmetic") {
    ArithmeticBehavior a;
    a.output_field = opt_string(b, "output_field", "value");
    a.expression = expr::parse(get_string(b, "expression"));
    t.behavior = std::move(a);
  } else {
    bad("unknown tool behavior kind '" + kind + "'");
  }
  t.strict_params = opt_bool(j, "strict_params", true);
  t.validate();
  return t;
}

namespace {

json encode_call(const ToolCall& c) { return {{"name", c.name}, {"params", c.params}}; }

ToolCall decode_call(const json& j) {
  ToolCall c;
  c.name = get_string(j, "name");
  c.params = has(j, "params") ? at(j, "params") : json::object();
  return c;
}

}  // namespace

json encode(const Scenario& s) {
  json hidden = json::object();
  for (const auto& [k, f] : s.hidden_facts) hidden[k] = {{"value", f.value}, {"aliases", f.aliases}};
  json tools = json::array();
  for (const auto& t : s.available_tools) tools.push_back(encode(t));
  json refs = json::array();
  for (const auto& c : s.reference_calls) refs.push_back(encode_call(c));
  return {{"id", s.id.str()},
          {"user_goal", s.user_goal},
          {"visible_facts", s.visible_facts},
          {"hidden_facts", hidden},
          {"tools", tools},
          {"gold", encode(s.gold)},
          {"optimal_steps", s.optimal_steps},
          {"requires_tool", s.requires_tool},
          {"gold_depends_on", s.gold_depends_on},
          {"reference_calls", refs}};
}

Scenario decode_scenario(const json& j) {
  Scenario s;
  s.id = ScenarioId(get_string(j, "id"));
  s.user_goal = get_string(j, "user_goal");
  s.visible_facts = opt_string_map(j, "visible_facts");
  if (has(j, "hidden_facts")) {
    for (const auto& [k, v] : get_object(j, "hidden_facts").items()) {
      s.hidden_facts[k] = HiddenFact{get_string(v, "value"), opt_strings(v, "aliases")};
    }
  }
  if (has(j, "tools")) {
    for (const auto& t : get_array(j, "tools")) s.available_tools.push_back(decode_tool(t));
  }
  s.gold = decode_gold(get_object(j, "gold"));
  s.optimal_steps = static_cast<int>(get_int(j, "optimal_steps"));
  s.requires_tool = get_bool(j, "requires_tool");
  s.gold_depends_on = opt_strings(j, "gold_depends_on");
  if (has(j, "reference_calls")) {
    for (const auto& c : get_array(j, "reference_calls")) s.reference_calls.push_back(decode_call(c));
  }
  s.validate();
  return s;
}

json encode(const Step& s) {
  json j{{"kind", name(s.kind)}};
  switch (s.kind) {
    case StepKind::assistant_msg:
    case StepKind::user_reply: j["text"] = s.text; break;
    case StepKind::tool_call: j["call"] = encode_call(s.call); break;
    case StepKind::tool_result: j["record"] = s.record; break;
  }
  return j;
}

Step decode_step(const json& j) {
  Step s;
  s.kind = get_enum<StepKind>(j, "kind");
  switch (s.kind) {
    case StepKind::assistant_msg:
    case StepKind::user_reply: s.text = get_string(j, "text"); break;
    case StepKind::tool_call: s.call = decode_call(get_object(j, "call")); break;
    case StepKind::tool_result: s.record = at(j, "record"); break;
  }
  return s;
}

json encode(const Trajectory& t) {
  json steps = json::array();
  for (const auto& s : t.steps) steps.push_back(encode(s));
  json j{{"scenario_id", t.scenario.str()}, {"steps", steps}, {"truncated", t.truncated}};
  if (t.final_answer) j["final_answer"] = *t.final_answer;
  return j;
}

Trajectory decode_trajectory(const json& j) {
  Trajectory t;
  t.scenario = ScenarioId(get_string(j, "scenario_id"));
  for (const auto& s : get_array(j, "steps")) t.steps.push_back(decode_step(s));
  if (has(j, "final_answer")) t.final_answer = get_string(j, "final_answer");
  t.truncated = opt_bool(j, "truncated", false);
  t.validate();
  return t;
}

std::vector<json> trajectory_lines(const Trajectory& t) {
  std::vector<json> out;
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    json line = encode(t.steps[i]);
    line["scenario_id"] = t.scenario.str();
    line["index"] = i;
    out.push_back(std::move(line));
  }
  json last{{"scenario_id", t.scenario.str()}, {"kind", "end"}, {"truncated", t.truncated}};
  last["final_answer"] = t.final_answer ? json(*t.final_answer) : json(nullptr);
  out.push_back(std::move(last));
  return out;
}

json encode(const AgenticScore& s) {
  return {{"answer_correct", s.answer_correct},
          {"tool_necessity", s.tool_necessity},
          {"efficiency", s.efficiency},
          {"param_accuracy", s.param_accuracy},
          {"scalar", s.scalar}};
}

AgenticWeights decode_agentic_weights(const json& j, AgenticWeights base) {
  base.answer = opt_number(j, "answer_correct", base.answer);
  base.necessity = opt_number(j, "tool_necessity", base.necessity);
  base.efficiency = opt_number(j, "efficiency", base.efficiency);
  base.params = opt_number(j, "param_accuracy", base.params);
  base.validate();
  return base;
}

json encode(const AgentAction& a) {
  switch (a.kind) {
    case AgentAction::Kind::message: return {{"action", "message"}, {"text", a.text}};
    case AgentAction::Kind::tool_call: return {{"action", "tool_call"}, {"call", encode_call(a.call)}};
    case AgentAction::Kind::final_answer: return {{"action", "final_answer"}, {"text", a.text}};
  }
  return {};
}

AgentAction decode_action(const json& j) {
  AgentAction a;
  const std::string kind = get_string(j, "action");
  if (kind == "message") {
    a.kind = AgentAction::Kind::message;
    a.text = get_string(j, "text");
  } else if (kind == "tool_call") {
    a.kind = AgentAction::Kind::tool_call;
    a.call = decode_call(get_object(j, "call"));
  } else if (kind == "final_answer") {
    a.kind = AgentAction::Kind::final_answer;
    a.text = get_string(j, "text");
  } else {
    bad("unknown agent action '" + kind + "'");
  }
  return a;
}

json encode(const CurriculumConfig& c) {
  return {{"k", c.k},
          {"core_threshold", c.core_threshold},
          {"frontier_threshold", c.frontier_threshold},
          {"mastery_sample_prob", c.mastery_sample_prob},
          {"learning_share", c.learning_share},
          {"mastery_streak", c.mastery_streak},
          {"batch_size", c.batch_size},
          {"success_cutoff", c.success_cutoff}};
}

CurriculumConfig decode_curriculum(const json& j, CurriculumConfig base) {
  base.k = opt_int(j, "k", base.k);
  base.core_threshold = opt_number(j, "core_threshold", base.core_threshold);
  base.frontier_threshold = opt_number(j, "frontier_threshold", base.frontier_threshold);
  base.mastery_sample_prob = opt_number(j, "mastery_sample_prob", base.mastery_sample_prob);
  base.learning_share = opt_number(j, "learning_share", base.learning_share);
  base.mastery_streak = opt_int(j, "mastery_streak", base.mastery_streak);
  base.batch_size = opt_int(j, "batch_size", base.batch_size);
  base.success_cutoff = opt_number(j, "success_cutoff", base.success_cutoff);
  base.validate();
  return base;
}

json encode(const SampleStats& s) {
  json hist = json::array();
  for (const auto& m : s.pass_history) {
    hist.push_back({{"k", m.k}, {"successes", m.successes}, {"timestamp", m.timestamp}});
  }
  return {{"task_id", s.task_id.str()},
          {"pass_history", hist},
          {"stratum", name(s.stratum)},
          {"mastery", s.mastery},
          {"consecutive_perfect", s.consecutive_perfect}};
}

SampleStats decode_stats(const json& j) {
  SampleStats s;
  s.task_id = TaskId(get_string(j, "task_id"));
  if (has(j, "pass_history")) {
    for (const auto& m : get_array(j, "pass_history")) {
      s.pass_history.push_back({static_cast<int>(get_int(m, "k")),
                                static_cast<int>(get_int(m, "successes")), opt_string(m, "timestamp")});
    }
  }
  s.stratum = opt_enum<Stratum>(j, "stratum", Stratum::learning);
  s.mastery = opt_bool(j, "mastery", false);
  s.consecutive_perfect = opt_int(j, "consecutive_perfect", 0);
  return s;
}

json encode(const Batch& b) {
  json entries = json::array();
  for (const auto& e : b.entries) {
    entries.push_back(
        {{"task_id", e.task_id.str()}, {"rollout_rewards", e.rollout_rewards}, {"source", name(e.source)}});
  }
  json pruned = json::array();
  for (const auto& p : b.pruned) {
    pruned.push_back({{"task_id", p.task_id.str()},
                      {"reason", name(p.reason)},
                      {"rollout_rewards", p.rollout_rewards}});
  }
  json comp = json::object();
  for (const auto& [pool, n] : b.composition) comp[name(pool)] = n;
  return {{"stage", name(b.stage)},
          {"entries", entries},
          {"pruned", pruned},
          {"composition", comp},
          {"notes", b.notes}};
}

std::vector<json> batch_lines(const Batch& b) {
  std::vector<json> out;
  for (const auto& e : b.entries) {
    out.push_back({{"task_id", e.task_id.str()}, {"rollout_rewards", e.rollout_rewards}});
  }
  for (const auto& p : b.pruned) {
    out.push_back({{"task_id", p.task_id.str()},
                   {"rollout_rewards", p.rollout_rewards},
                   {"pruned_reason", name(p.reason)}});
  }
  return out;
}

}  // namespace finforge::json
