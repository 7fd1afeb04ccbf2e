#include "doctest.h"
#include "finforge/core.hpp"
#include "finforge/serialize.hpp"
#include "support.hpp"

using namespace finforge;
using Json = nlohmann::json;

namespace {

template <class T, class Decode>
void round_trip(const T& value, Decode decode) {
  const Json once = json::encode(value);
  const T back = decode(once);
  CHECK(json::encode(back) == once);
  // Through text as well.
  CHECK(json::encode(decode(Json::parse(once.dump()))) == once);
}

}  // namespace

TEST_CASE("gold answers") {
  const std::vector<GoldAnswer> golds{
      GoldAnswer(NumericGold{12.7, 0.01, 1e-4}, GoldMethod::axiom),
      GoldAnswer(NumericGold{-3.5, 0, 0}, GoldMethod::code_exec),
      text_gold("\\boxed{B}", GoldMethod::vote),
      GoldAnswer(FactSetGold{"gt-nonrecurring-q1"}, GoldMethod::human),
      GoldAnswer(RubricGold{"Covers profitability."}, GoldMethod::human),
  };
  for (const auto& g : golds) {
    CHECK(json::decode_gold(json::encode(g)) == g);
    round_trip(g, json::decode_gold);
  }
  CHECK(json::encode(golds[0]).at("payload").at("type") == "numeric");
  CHECK(json::encode(golds[0]).at("confidence") == "deterministic");
  CHECK(json::decode_gold(Json::parse(R"({"payload": {"type": "exact_text", "text": "\\boxed{B}"}, "method": "vote"})")) ==
        GoldAnswer(TextGold{"b"}, GoldMethod::vote));

  for (const char* bad : {R"({"payload": {"type": "numeric"}, "method": "axiom"})",
                          R"({"payload": {"type": "numeric", "value": "1"}, "method": "axiom"})",
                          R"({"payload": {"type": "vibes"}, "method": "axiom"})",
                          R"({"payload": {"type": "numeric", "value": 1}, "method": "guess"})",
                          R"({"method": "axiom"})"}) {
    CAPTURE(bad);
    try {
      json::decode_gold(Json::parse(bad));
      FAIL("expected malformed");
    } catch (const Error& e) {
      CHECK((e.code() == ErrorCode::malformed || e.code() == ErrorCode::invalid_argument));
    }
  }
}

TEST_CASE("tasks of every provenance") {
  AxiomRegistry axioms;
  KnowledgeBase kb;
  TemplateRegistry templates;
  test::load_axioms(axioms);
  test::load_kb(kb);
  test::load_templates(templates);
  const TaskGenerator gen(axioms, kb, templates);

  auto a = gen.deduction_task(AxiomId("capm"), "beta", 4);
  a.id = TaskId("a");
  auto k = gen.knowledge_task({}, 4, TemplateId("tpl-intent"), TaskType::intent, 9);
  k.id = TaskId("k");
  auto e = gen.evolve(a, {EvolutionKind::transform_format, {{"to", "multiple_choice"}}}, 2);
  e.id = TaskId("e");
  InstructionTask p;
  p.id = TaskId("p");
  p.prompt = "Share of non-recurring items?";
  p.provenance = KnowledgeProvenance{{PointId("kp-acct-01")}, TemplateId("tpl-nonrecurring")};
  p.program = VerificationProgram{"python3", "print(1)", {{"x", "1"}}, 100.0, 0.01, 0.0};
  p.tags = {"json_output"};
  p.expected_themes = {"Profitability"};
  p.context_docs = {"doc one", "doc two"};

  for (const auto& t : {a, k, e, p}) {
    const auto back = json::decode_task(json::encode(t));
    CHECK(back == t);
    round_trip(t, json::decode_task);
  }
  Json broken = json::encode(a);
  broken.erase("prompt");
  try {
    json::decode_task(broken);
    FAIL("expected malformed");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::malformed);
    CHECK(std::string(err.what()).find("prompt") != std::string::npos);
  }
}

TEST_CASE("knowledge base records") {
  AxiomRegistry axioms;
  test::load_axioms(axioms);
  for (const auto& id : axioms.ids()) {
    const auto& ax = axioms.get(id);
    CHECK(same_definition(json::decode_axiom(json::encode(ax)), ax));
    round_trip(ax, json::decode_axiom);
  }
  CHECK(json::encode(axioms.get(AxiomId("accounting_identity"))).at("relation") == "(= A (+ L E))");

  const auto gt = test::load_fact_set();
  round_trip(gt, json::decode_fact_set);
  CHECK(gt.facts().size() == 5);
  CHECK(gt.facts()[0].unit == Unit::money("CNY"));
}

TEST_CASE("funnel records") {
  const VerificationRecord rec{TaskId("t"), VerificationLevel::L2, Json{{"modal_share", 1.0}}, "2026-01-01T00:00:00Z"};
  const auto back = json::decode_record(json::encode(rec));
  CHECK(back.task_id == rec.task_id);
  CHECK(back.level == rec.level);
  CHECK(back.evidence == rec.evidence);
  CHECK(back.timestamp == rec.timestamp);

  AdjudicationItem item;
  item.id = ItemId("adj-1");
  item.task_id = TaskId("t");
  item.candidate_answers = {{"m1", "12.7"}, {"m2", "13.4"}};
  item.disagreement_summary = "split";
  item.created_at = "2026-01-01T00:00:00Z";
  CHECK(json::decode_item(json::encode(item)) == item);
  item.status = AdjudicationStatus::resolved;
  item.resolution = Resolution{GoldAnswer(NumericGold{12.7, 0.01, 1e-4}, GoldMethod::human), "e", "2026-01-02T00:00:00Z"};
  CHECK(json::decode_item(json::encode(item)) == item);

  // status and resolution must agree
  Json inconsistent = json::encode(item);
  inconsistent["status"] = "pending";
  CHECK_THROWS_AS(json::decode_item(inconsistent), Error);
}

TEST_CASE("curriculum records") {
  SampleStats s;
  s.task_id = TaskId("t");
  s.pass_history = {{10, 7, "a"}, {10, 10, "b"}};
  s.stratum = Stratum::core;
  s.consecutive_perfect = 1;
  CHECK(json::decode_stats(json::encode(s)) == s);
  round_trip(s, json::decode_stats);

  Batch b;
  b.stage = Stratum::learning;
  b.entries = {{TaskId("x"), {1, 0}, Pool::learning}};
  b.pruned = {{TaskId("y"), PruneReason::zero_variance_impossible, {0, 0}}};
  const auto lines = json::batch_lines(b);
  REQUIRE(lines.size() == 2);
  CHECK(lines[0] == Json{{"task_id", "x"}, {"rollout_rewards", {1.0, 0.0}}});
  CHECK(lines[1].at("pruned_reason") == "zero_variance_impossible");

  CurriculumConfig cfg;
  cfg.k = 8;
  const auto back = json::decode_curriculum(json::encode(cfg), CurriculumConfig{});
  CHECK(back.k == 8);
  CHECK(json::decode_curriculum(Json{{"mastery_sample_prob", 0.3}}, cfg).k == 8);
}

TEST_CASE("agentic records") {
  const auto s = test::load_scenario("account-balance");
  round_trip(s, json::decode_scenario);

  Trajectory t;
  t.scenario = s.id;
  t.steps = {Step{StepKind::assistant_msg, "account id?", {}, {}},
             Step{StepKind::user_reply, "account_id: AC-7731", {}, {}},
             Step{StepKind::tool_call, "", ToolCall{"lookup_balance", {{"account_id", "AC-7731"}}}, {}},
             Step{StepKind::tool_result, "", {}, Json{{"balance", 52340.75}}}};
  t.final_answer = "52340.75";
  CHECK(json::decode_trajectory(json::encode(t)) == t);
  const auto lines = json::trajectory_lines(t);
  CHECK(lines.size() == t.steps.size() + 1);
  CHECK(lines.back().at("final_answer") == "52340.75");
  for (std::size_t i = 0; i < t.steps.size(); ++i) CHECK(json::decode_step(lines[i]) == t.steps[i]);
}

TEST_CASE("routing and weights overrides") {
  const auto r = json::decode_routing(Json::parse(R"({"compliance": {"rule_weight": 0.3, "judge_weight": 0.7,
                                                   "judge_kinds": ["consistency"]}})"),
                                      VerifierRouting::defaults());
  CHECK(r.at(TaskType::compliance).rule_weight == 0.3);
  CHECK(r.at(TaskType::calculation) == VerifierRouting::defaults().at(TaskType::calculation));
  CHECK_THROWS_AS(json::decode_routing(Json::parse(R"({"compliance": {"rule_weight": 0.3, "judge_weight": 0.3,
                                                   "judge_kinds": ["consistency"]}})"),
                                       VerifierRouting::defaults()),
                  Error);
  const auto w = json::decode_weights(Json::parse(R"({"commenting": {"rule": {"fact": 1.0}, "judge": {"style": 1.0}}})"),
                                      RewardWeights::defaults());
  CHECK(w.at(TaskType::commenting).rule.at("fact") == 1.0);
}
