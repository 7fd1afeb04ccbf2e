#include <random>

#include "doctest.h"
#include "finforge/agentsim.hpp"
#include "finforge/core.hpp"
#include "support.hpp"

using namespace finforge;

namespace {

AgentAction say(std::string text) { return {AgentAction::Kind::message, std::move(text), {}}; }
AgentAction answer(std::string text) { return {AgentAction::Kind::final_answer, std::move(text), {}}; }
AgentAction call(std::string name, nlohmann::json params) {
  return {AgentAction::Kind::tool_call, {}, ToolCall{std::move(name), std::move(params)}};
}

Trajectory run(const Scenario& s, std::vector<AgentAction> script) {
  ScriptedDriver d(std::move(script));
  return run_scenario(s, d);
}

Scenario no_tool_scenario() {
  Scenario s;
  s.id = ScenarioId("capm-mental");
  s.user_goal = "Risk-free 5%, beta 1.1, market 12%: required return?";
  s.gold = GoldAnswer(NumericGold{12.7, 0.01, 0}, GoldMethod::axiom);
  s.optimal_steps = 1;
  s.requires_tool = false;
  ToolSpec calc;
  calc.name = "calc";
  calc.params = {{"x", ParamType::number, {}, true}};
  calc.behavior = ArithmeticBehavior{"value", expr::parse("(* x 1)")};
  s.available_tools = {calc};
  return s;
}

}  // namespace

TEST_CASE("tool call validation") {
  const auto s = test::load_scenario("loan-interest");
  const ToolSpec& tool = *s.tool("simple_interest");

  CHECK(validate_tool_call({"simple_interest", {{"principal", 20000}, {"rate_percent", 6.5}, {"years", 3}}}, tool)
            .empty());
  const auto missing = validate_tool_call({"simple_interest", {{"principal", 20000}, {"rate_percent", 6.5}}}, tool);
  REQUIRE(missing.size() == 1);
  CHECK(missing[0].kind == "missing");
  CHECK(missing[0].param == "years");

  const auto typed =
      validate_tool_call({"simple_interest", {{"principal", "twenty"}, {"rate_percent", 6.5}, {"years", 3}}}, tool);
  REQUIRE(typed.size() == 1);
  CHECK(typed[0].kind == "type");

  const ToolCall extra{"simple_interest", {{"principal", 1}, {"rate_percent", 1}, {"years", 1}, {"fee", 2}}};
  ToolSpec strict = tool;
  strict.strict_params = true;
  ToolSpec lax = tool;
  lax.strict_params = false;
  REQUIRE(validate_tool_call(extra, strict).size() == 1);
  CHECK(validate_tool_call(extra, strict)[0].kind == "unknown");
  CHECK(validate_tool_call(extra, lax).empty());

  CHECK_THROWS_AS(validate_tool_call(ToolCall{"transfer_funds", {}}, s.available_tools), Error);

  ToolSpec choice;
  choice.name = "rate";
  choice.params = {{"tenor", ParamType::enumeration, {"1y", "5y"}, true}, {"on", ParamType::date, {}, false}};
  choice.behavior = LookupBehavior{{"tenor"}, {{"1y", {{"rate", 3.1}}}}};
  CHECK(validate_tool_call({"rate", {{"tenor", "1y"}}}, choice).empty());
  CHECK(validate_tool_call({"rate", {{"tenor", "10y"}}}, choice)[0].kind == "enum");
  CHECK(validate_tool_call({"rate", {{"tenor", "1y"}, {"on", "2024-02-30x"}}}, choice)[0].kind == "type");
  CHECK(validate_tool_call({"rate", {{"tenor", "1y"}, {"on", "2024-02-29"}}}, choice).empty());
}

TEST_CASE("tool execution") {
  const auto loan = test::load_scenario("loan-interest");
  const auto r = execute_tool(*loan.tool("simple_interest"),
                              {"simple_interest", {{"principal", 20000}, {"rate_percent", 6.5}, {"years", 3}}});
  CHECK(r.at("interest").get<double>() == doctest::Approx(3900.0).epsilon(1e-12));
  const auto err = execute_tool(*loan.tool("simple_interest"), {"simple_interest", {{"principal", 1}}});
  CHECK(err.contains("error"));

  const auto bank = test::load_scenario("account-balance");
  const auto& lookup = *bank.tool("lookup_balance");
  CHECK(execute_tool(lookup, {"lookup_balance", {{"account_id", "AC-7731"}}}).at("balance") == 52340.75);
  CHECK(execute_tool(lookup, {"lookup_balance", {{"account_id", "AC-0000"}}}).at("error") == "not_found");
}

TEST_CASE("run_scenario: clarification, tools and truncation") {
  const auto s = test::load_scenario("account-balance");
  const auto t = run(s, {say("Could you tell me your account number?"),
                         call("lookup_balance", {{"account_id", "{{reply}}"}}),
                         answer("Your balance is {{result.balance}} USD.")});
  CHECK_FALSE(t.truncated);
  REQUIRE(t.final_answer.has_value());
  CHECK(t.final_answer->find("52340.75") != std::string::npos);
  CHECK(t.agent_steps() == static_cast<std::size_t>(s.optimal_steps));
  REQUIRE(t.steps.size() == 4);
  CHECK(t.steps[1].kind == StepKind::user_reply);
  CHECK(t.steps[1].text.find("AC-7731") != std::string::npos);
  CHECK(t.steps[2].call.params.at("account_id") == "AC-7731");
  CHECK_NOTHROW(t.validate());

  // Same script, same trajectory.
  CHECK(run(s, {say("Could you tell me your account number?"), call("lookup_balance", {{"account_id", "{{reply}}"}}),
                answer("Your balance is {{result.balance}} USD.")}) == t);

  const auto bad = run(s, {call("lookup_balance", nlohmann::json::object()), answer("unknown")});
  REQUIRE(bad.steps.size() >= 2);
  CHECK(bad.steps[1].kind == StepKind::tool_result);
  CHECK(bad.steps[1].record.contains("error"));

  // Never asking: the reply is unknown, so the tool cannot return the gold record.
  const auto guess = run(s, {call("lookup_balance", {{"account_id", "{{reply}}"}}), answer("{{result.balance}}")});
  CHECK(score_trajectory(guess, s).answer_correct == 0.0);

  std::vector<AgentAction> chatter(40, say("thinking"));
  const auto cut = run(s, chatter);
  CHECK(cut.truncated);
  CHECK_FALSE(cut.final_answer.has_value());
  CHECK(cut.agent_steps() == kDefaultStepBudget);
  CHECK(score_trajectory(cut, s).answer_correct == 0.0);

  const auto silent = run(s, {});
  CHECK(silent.truncated);
}

TEST_CASE("trajectory structure") {
  Trajectory t;
  t.scenario = ScenarioId("x");
  t.steps.push_back(Step{StepKind::tool_result, "", {}, nlohmann::json::object()});
  CHECK_THROWS_AS(t.validate(), Error);
}

TEST_CASE("score_trajectory fixtures are strictly ordered") {
  const auto s = test::load_scenario("account-balance");
  const auto optimal = run(s, {say("What is your account id?"), call("lookup_balance", {{"account_id", "{{reply}}"}}),
                               answer("{{result.balance}}")});
  const auto redundant =
      run(s, {say("What is your account id?"), call("lookup_balance", {{"account_id", "{{reply}}"}}),
              call("lookup_balance", {{"account_id", "{{reply}}"}}), answer("{{result.balance}}")});
  const auto wrong_param = run(s, {say("What is your account id?"), call("lookup_balance", {{"account_id", "AC-1002"}}),
                                   answer("{{result.balance}}")});
  const auto no_clarify = run(s, {call("lookup_balance", nlohmann::json::object()), answer("52340.75")});

  const auto so = score_trajectory(optimal, s);
  const auto sr = score_trajectory(redundant, s);
  const auto sw = score_trajectory(wrong_param, s);
  const auto sn = score_trajectory(no_clarify, s);

  CHECK(so.answer_correct == 1.0);
  CHECK(so.tool_necessity == 1.0);
  CHECK(so.efficiency == 1.0);
  CHECK(so.param_accuracy == 1.0);
  CHECK(so.scalar == 1.0);

  CHECK(sr.efficiency == 0.75);
  CHECK(sr.scalar == doctest::Approx(0.25 * (1 + 1 + 0.75 + 1)).epsilon(1e-12));

  CHECK(sw.param_accuracy < 1.0);
  CHECK(sw.answer_correct == 0.0);
  CHECK(sn.answer_correct == 0.0);  // the gold figure without asking does not count
  CHECK(sn.param_accuracy == 0.0);

  CHECK(so.scalar > sr.scalar);
  CHECK(sr.scalar > sw.scalar);
  CHECK(sr.scalar > sn.scalar);

  Trajectory other = optimal;
  other.scenario = ScenarioId("loan-interest");
  CHECK_THROWS_AS(score_trajectory(other, s), Error);
}

TEST_CASE("necessity asymmetry") {
  const auto bank = test::load_scenario("account-balance");
  const auto talk = run(bank, {say("What is your account id?"), answer("52340.75")});
  CHECK(score_trajectory(talk, bank).tool_necessity == 0.0);

  const auto s = no_tool_scenario();
  const auto mental = run(s, {answer("12.7%")});
  const auto ms = score_trajectory(mental, s);
  CHECK(ms.tool_necessity == 1.0);
  CHECK(ms.param_accuracy == 1.0);
  CHECK(ms.scalar == 1.0);
  const auto tooled = run(s, {call("calc", {{"x", 12.7}}), answer("12.7%")});
  CHECK(score_trajectory(tooled, s).tool_necessity == 0.0);
}

TEST_CASE("loan interest via arithmetic tool") {
  const auto s = test::load_scenario("loan-interest");
  const auto t = run(s, {call("simple_interest", {{"principal", 20000}, {"rate_percent", 6.5}, {"years", 3}}),
                         answer("{{result.interest}}")});
  CHECK(score_trajectory(t, s).scalar == 1.0);
}

TEST_CASE("random scripts: ranges, gating and redundancy") {
  const auto s = test::load_scenario("account-balance");
  const std::vector<AgentAction> pool{
      say("What is your account number?"),
      say("Let me check."),
      call("lookup_balance", {{"account_id", "{{reply}}"}}),
      call("lookup_balance", {{"account_id", "AC-7731"}}),
      call("lookup_balance", {{"account_id", "AC-1002"}}),
      call("lookup_balance", nlohmann::json::object()),
      call("lookup_balance", {{"account_id", "AC-7731"}, {"branch", "x"}}),
  };
  const std::vector<AgentAction> finals{answer("{{result.balance}}"), answer("52340.75"), answer("I don't know")};
  std::mt19937_64 rng(99);
  int gated_hits = 0;
  for (int i = 0; i < 3000; ++i) {
    std::vector<AgentAction> script;
    const int n = static_cast<int>(rng() % 5);
    for (int k = 0; k < n; ++k) script.push_back(pool[rng() % pool.size()]);
    script.push_back(finals[rng() % finals.size()]);
    const auto t = run(s, script);
    const auto sc = score_trajectory(t, s);
    for (double c : {sc.answer_correct, sc.tool_necessity, sc.efficiency, sc.param_accuracy, sc.scalar}) {
      CHECK(c >= 0.0);
      CHECK(c <= 1.0);
    }
    CHECK(std::fabs(sc.scalar - 0.25 * (sc.answer_correct + sc.tool_necessity + sc.efficiency +
                                        sc.param_accuracy)) <= 1e-12);
    if (sc.answer_correct == 1.0) {
      CHECK(clarified(t, s, "account_id"));
      ++gated_hits;
    }
    // Duplicating any existing call (with its result) never raises the score.
    for (std::size_t k = 0; k < t.steps.size(); ++k) {
      if (t.steps[k].kind != StepKind::tool_call) continue;
      Trajectory dup = t;
      dup.steps.insert(dup.steps.begin() + static_cast<long>(k) + 2, t.steps.begin() + static_cast<long>(k),
                       t.steps.begin() + static_cast<long>(k) + 2);
      CHECK(score_trajectory(dup, s).scalar <= sc.scalar + 1e-15);
      break;
    }
  }
  CHECK(gated_hits > 0);
}
