#include <atomic>
#include <random>
#include <thread>

#include "doctest.h"
#include "finforge/core.hpp"
#include "finforge/judgeverify.hpp"
#include "finforge/kbgen.hpp"
#include "httplib.h"
#include "support.hpp"

using namespace finforge;

namespace {

const char* kSource =
    "Non-recurring items totalled 21,193,050.28 CNY in the first quarter. "
    "Net profit attributable to shareholders was 181,662,559.98 CNY.";

InstructionTask commenting_task() {
  InstructionTask t;
  t.id = TaskId("c-1");
  t.task_type = TaskType::commenting;
  t.prompt = "Comment on the quarter.";
  t.context_docs = {kSource,
                    "Non-recurring items contributed about 11.67% of net profit. Net profit excluding "
                    "non-recurring items grew by 92.68% YoY, and headline net profit growth was 56.89%."};
  t.expected_themes = {"Profitability", "Future Outlook"};
  t.gold = GoldAnswer(FactSetGold{"gt-nonrecurring-q1"}, GoldMethod::human);
  return t;
}

}  // namespace

TEST_CASE("mock consistency judge") {
  MockJudge mock;
  const auto supported = judge_consistency(kSource, "Net profit attributable to shareholders was 181,662,559.98 CNY.", mock);
  CHECK(supported.score == 1.0);
  CHECK(supported.flags.empty());

  const auto invented =
      judge_consistency(kSource, "Net profit attributable to shareholders was 199,000,000 CNY.", mock);
  CHECK(invented.score == 0.0);
  REQUIRE(invented.flags.size() == 1);
  CHECK(invented.flags[0].kind == "hallucination");

  const auto empty = judge_consistency(kSource, "", mock);
  CHECK(empty.score == 1.0);
  CHECK(empty.flags.empty());

  // One supported claim of two.
  const auto half = judge_consistency(
      kSource, "Net profit attributable to shareholders was 181,662,559.98 CNY. Dividends doubled.", mock);
  CHECK(half.score == 0.5);
  REQUIRE(half.flags.size() == 1);
  CHECK(half.flags[0].kind == "unsupported");
}

TEST_CASE("mock structure judge") {
  MockJudge mock;
  const std::vector<std::string> themes{"Profitability", "Future Outlook"};
  CHECK(judge_structure("Profitability improved as margins widened.\n\nLooking ahead, the outlook is stable.",
                        themes, mock)
            .score == 1.0);
  CHECK(judge_structure("Profitability improved as margins widened.", themes, mock).score == 0.5);
  CHECK(judge_structure("", themes, mock).score == 0.0);
  CHECK_THROWS_AS(judge_structure("text", {}, mock), Error);
}

TEST_CASE("mock style judge") {
  MockJudge mock;
  CHECK(judge_style("Margins improved this quarter and costs fell.", mock).score == 1.0);
  // 10 words, 3 of them filler: 1 - 2 * 0.3.
  const auto padded = judge_style("Margins really improved this quarter and costs quite very fell.", mock);
  CHECK(padded.score == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(padded.score < 1.0);
  CHECK(judge_style("", mock).score == 0.0);

  std::string long_sentence;
  for (int i = 0; i < 40; ++i) long_sentence += "word ";
  long_sentence += "end.";
  CHECK(judge_style(long_sentence, mock).score == doctest::Approx(0.9));
}

TEST_CASE("mock judge is deterministic") {
  MockJudge mock;
  const auto task = commenting_task();
  for (int i = 0; i < 3; ++i) {
    const auto a = judge_consistency(task.context_docs[1], test::kNonRecurringCommentary, mock);
    const auto b = judge_consistency(task.context_docs[1], test::kNonRecurringCommentary, mock);
    CHECK(a.score == b.score);
    CHECK(a.raw == b.raw);
  }
}

TEST_CASE("judge request shape") {
  JudgeRequest r;
  r.kind = JudgeKind::structure;
  CHECK_THROWS_AS(r.validate(), Error);
  r.expected_themes = std::vector<std::string>{"Profitability"};
  CHECK_NOTHROW(r.validate());
  r.kind = JudgeKind::style;
  CHECK_THROWS_AS(r.validate(), Error);

  CHECK_THROWS_AS(parse_verdict(nlohmann::json{{"score", 1.5}}), Error);
  CHECK_THROWS_AS(parse_verdict(nlohmann::json{{"verdict", "good"}}), Error);
  CHECK_THROWS_AS(parse_verdict(nlohmann::json("fine")), Error);
  CHECK_THROWS_AS(parse_verdict(nlohmann::json{{"score", 0.5}, {"flags", "none"}}), Error);
  const auto ok = parse_verdict(nlohmann::json{{"score", 0.5}, {"flags", {{{"kind", "x"}, {"span", {1, 3}}}}}});
  CHECK(ok.score == 0.5);
  REQUIRE(ok.flags.size() == 1);
  CHECK(ok.flags[0].span == std::optional<Span>(Span{1, 3}));
}

TEST_CASE("routing table invariants") {
  const auto routing = VerifierRouting::defaults();
  for (const auto& [type, entry] : routing.entries()) {
    CHECK(entry.rule_weight + entry.judge_weight == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(routing.at(TaskType::calculation).judge_weight == 0.0);
  CHECK(routing.at(TaskType::intent).rule_weight == 0.0);
  CHECK(routing.at(TaskType::commenting).rule_weight == 0.5);
  CHECK(routing.at(TaskType::commenting).judge_weight == 0.5);

  VerifierRouting r;
  CHECK_THROWS_AS(r.set(TaskType::commenting, {0.6, 0.6, {JudgeKind::style}}), Error);
  CHECK_THROWS_AS(r.set(TaskType::commenting, {0.5, 0.5, {}}), Error);
  CHECK_THROWS_AS(r.at(TaskType::commenting), Error);
  RewardWeights w;
  CHECK_THROWS_AS(w.set(TaskType::commenting, {{{"fact", 0.5}}, {}}), Error);
}

TEST_CASE("aggregate_reward examples") {
  const auto routing = VerifierRouting::defaults();
  const auto weights = RewardWeights::defaults();

  RuleVerdict correct;
  correct.answer_match = true;
  const auto calc = aggregate_reward(TaskType::calculation, correct, {}, routing, weights);
  CHECK(calc.scalar == 1.0);
  CHECK(calc.components.size() == 1);

  const auto intent = aggregate_reward(TaskType::intent, RuleVerdict{},
                                       {{JudgeKind::consistency, JudgeVerdict{0.65, {}, ""}}}, routing, weights);
  CHECK(intent.scalar == 0.65);

  // Rule composite 1.0, judge composite 0.8.
  RuleVerdict rv;
  rv.fact_score = 1.0;
  rv.format_score = 1.0;
  const std::map<JudgeKind, JudgeVerdict> jv{{JudgeKind::consistency, {0.8, {}, ""}},
                                             {JudgeKind::structure, {0.8, {}, ""}},
                                             {JudgeKind::style, {0.8, {}, ""}}};
  const auto blend = aggregate_reward(TaskType::commenting, rv, jv, routing, weights);
  CHECK(blend.scalar == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(std::fabs(blend.recompute() - blend.scalar) <= 1e-12);

  // A component the route requires must be present.
  RuleVerdict partial;
  partial.fact_score = 1.0;
  CHECK_THROWS_AS(aggregate_reward(TaskType::commenting, partial, jv, routing, weights), Error);
  CHECK_THROWS_AS(aggregate_reward(TaskType::intent, RuleVerdict{}, {}, routing, weights), Error);
}

TEST_CASE("aggregate_reward is bounded, recomputable and monotone") {
  const auto routing = VerifierRouting::defaults();
  const auto weights = RewardWeights::defaults();
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 5000; ++i) {
    RuleVerdict rv;
    rv.fact_score = u(rng);
    rv.format_score = u(rng);
    std::map<JudgeKind, JudgeVerdict> jv{{JudgeKind::consistency, {u(rng), {}, ""}},
                                         {JudgeKind::structure, {u(rng), {}, ""}},
                                         {JudgeKind::style, {u(rng), {}, ""}}};
    const auto base = aggregate_reward(TaskType::commenting, rv, jv, routing, weights);
    CHECK(base.scalar >= 0.0);
    CHECK(base.scalar <= 1.0);
    CHECK(std::fabs(base.recompute() - base.scalar) <= 1e-12);
    // Independent recombination from the stated weights.
    const double rule = 0.7 * *rv.fact_score + 0.3 * *rv.format_score;
    const double judge = 0.5 * jv[JudgeKind::consistency].score + 0.3 * jv[JudgeKind::structure].score +
                         0.2 * jv[JudgeKind::style].score;
    CHECK(std::fabs(base.scalar - (0.5 * rule + 0.5 * judge)) <= 1e-12);

    switch (i % 5) {
      case 0: rv.fact_score = *rv.fact_score + (1.0 - *rv.fact_score) * u(rng); break;
      case 1: rv.format_score = *rv.format_score + (1.0 - *rv.format_score) * u(rng); break;
      case 2: jv[JudgeKind::consistency].score += (1.0 - jv[JudgeKind::consistency].score) * u(rng); break;
      case 3: jv[JudgeKind::structure].score += (1.0 - jv[JudgeKind::structure].score) * u(rng); break;
      case 4: jv[JudgeKind::style].score += (1.0 - jv[JudgeKind::style].score) * u(rng); break;
    }
    CHECK(aggregate_reward(TaskType::commenting, rv, jv, routing, weights).scalar >= base.scalar);
  }
}

TEST_CASE("rule-only routes never call the judge") {
  AxiomRegistry axioms;
  KnowledgeBase kb;
  TemplateRegistry templates;
  test::load_axioms(axioms);
  const TaskGenerator gen(axioms, kb, templates);
  MockJudge mock;
  CountingJudge counting(mock);
  const auto routing = VerifierRouting::defaults();
  const auto weights = RewardWeights::defaults();
  ScoringContext ctx{&routing, &weights, {}, nullptr, &counting, std::nullopt};

  const auto ids = axioms.ids();
  int scored = 0;
  for (std::uint64_t seed = 0; scored < 100; ++seed) {
    const auto& ax = axioms.get(ids[seed % ids.size()]);
    const auto t = gen.deduction_task(ax.id, ax.relation.lhs, seed);
    const double g = std::get<NumericGold>(t.gold->payload()).value;
    const auto right = score_response(t, "<think>work</think>\\boxed{" + std::to_string(g) + "}", ctx);
    const auto wrong = score_response(t, "\\boxed{" + std::to_string(g * 2 + 1) + "}", ctx);
    CHECK(right.scalar == 1.0);
    CHECK(wrong.scalar == 0.0);
    ++scored;
  }
  CHECK(counting.calls() == 0);

  InstructionTask table;
  table.task_type = TaskType::table_reasoning;
  table.gold = GoldAnswer(NumericGold{3.0, 0, 1e-4}, GoldMethod::code_exec);
  score_response(table, "3", ctx);
  CHECK(counting.calls() == 0);
}

TEST_CASE("commenting blends rule and judge verifiers") {
  MockJudge mock;
  CountingJudge counting(mock);
  const auto routing = VerifierRouting::defaults();
  const auto weights = RewardWeights::defaults();
  const auto facts = test::load_fact_set();
  const auto rules = test::load_rules();
  ScoringContext ctx{&routing, &weights, {&rules[0]}, &facts, &counting, std::nullopt};
  const auto task = commenting_task();

  const auto b = score_response(task, test::kNonRecurringCommentary, ctx);
  CHECK(counting.calls() == 3);
  REQUIRE(b.components.size() == 5);
  CHECK(b.components.at("fact") == 1.0);
  CHECK(b.components.at("format") == 0.0);  // "92.68% YoY" is the only YoY site
  const double rule = 0.7 * b.components.at("fact") + 0.3 * b.components.at("format");
  const double judge = 0.5 * b.components.at("consistency") + 0.3 * b.components.at("structure") +
                       0.2 * b.components.at("style");
  CHECK(std::fabs(b.scalar - (0.5 * rule + 0.5 * judge)) <= 1e-12);
  CHECK(std::fabs(b.recompute() - b.scalar) <= 1e-12);

  const auto again = score_response(task, test::kNonRecurringCommentary, ctx);
  CHECK(again.components == b.components);
  CHECK(again.scalar == b.scalar);
  CHECK(again.audit == b.audit);

  // Malformed think tags score zero without consulting the judge.
  counting.reset();
  const auto bad = score_response(task, "answer</think>", ctx);
  CHECK(bad.scalar == 0.0);
  CHECK(counting.calls() == 0);
}

TEST_CASE("multiple-choice letters resolve to option text") {
  InstructionTask t;
  t.task_type = TaskType::calculation;
  t.format = AnswerFormat::multiple_choice;
  t.options = {"10", "12.7%", "13.4%", "9"};
  t.gold = GoldAnswer(NumericGold{12.7, 0.01, 1e-4}, GoldMethod::axiom);
  CHECK(resolve_choice(t, "\\boxed{B}") == "12.7%");
  CHECK(resolve_choice(t, "(c)") == "13.4%");
  CHECK(resolve_choice(t, "E") == "E");
  CHECK(match_answer(resolve_choice(t, "\\boxed{B}"), *t.gold));
  CHECK_FALSE(match_answer(resolve_choice(t, "A"), *t.gold));
}

TEST_CASE("HTTP judge client") {
  httplib::Server server;
  std::atomic<int> hits{0};
  std::set<std::string> request_ids;
  std::mutex mu;
  server.Post("/judge", [&](const httplib::Request& req, httplib::Response& res) {
    const auto body = nlohmann::json::parse(req.body);
    {
      std::lock_guard lock(mu);
      request_ids.insert(body.at("request_id").get<std::string>());
    }
    const int n = ++hits;
    const std::string output = body.at("output");
    if (output == "flaky" && n == 1) {
      res.status = 503;
      return;
    }
    if (output == "prose") {
      res.set_content("looks good to me", "text/plain");
      return;
    }
    if (output == "slow") std::this_thread::sleep_for(std::chrono::milliseconds(600));
    res.set_content(R"({"score": 0.75, "flags": [], "raw": "remote"})", "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  HttpJudgeOptions opt;
  opt.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/judge";
  opt.timeout = std::chrono::milliseconds(300);
  opt.backoff = std::chrono::milliseconds(5);
  opt.max_retries = 2;
  HttpJudgeClient client(opt);

  JudgeRequest r;
  r.kind = JudgeKind::style;
  r.output = "fine";
  const auto v = client.evaluate(r);
  CHECK(v.score == 0.75);
  CHECK(v.raw == "remote");

  // A 5xx is retried under the same request id.
  hits = 0;
  request_ids.clear();
  r.output = "flaky";
  r.request_id = "req-flaky";
  CHECK(client.evaluate(r).score == 0.75);
  CHECK(hits == 2);
  CHECK(request_ids == std::set<std::string>{"req-flaky"});

  r.request_id.clear();
  r.output = "prose";
  try {
    client.evaluate(r);
    FAIL("expected malformed");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::malformed);
  }

  r.output = "slow";
  try {
    client.evaluate(r);
    FAIL("expected timeout");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::timeout);
  }

  server.stop();
  th.join();

  HttpJudgeOptions dead = opt;
  dead.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/judge";
  dead.max_retries = 0;
  HttpJudgeClient gone(dead);
  r.output = "fine";
  try {
    gone.evaluate(r);
    FAIL("expected unavailable");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::unavailable);
  }
  CHECK_THROWS_AS(HttpJudgeClient(HttpJudgeOptions{"nonsense"}), Error);
}
