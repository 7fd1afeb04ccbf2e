#include <cmath>
#include <set>

#include "doctest.h"
#include "finforge/expr.hpp"
#include "finforge/judgeverify.hpp"
#include "finforge/kbgen.hpp"
#include "finforge/ruleverify.hpp"
#include "support.hpp"

using namespace finforge;

namespace {

FinancialAxiom identity() {
  FinancialAxiom a;
  a.id = AxiomId("acct");
  a.name = "Accounting identity";
  a.variables = {{"assets", "Assets", VarUnit::currency, {0, 1000}, SignConstraint::nonneg},
                 {"liabilities", "Liabilities", VarUnit::currency, {0, 1000}, SignConstraint::nonneg},
                 {"equity", "Equity", VarUnit::currency, {0, 1000}, SignConstraint::nonneg}};
  a.relation = expr::parse_relation("(= assets (+ liabilities equity))");
  return a;
}

struct World {
  AxiomRegistry axioms;
  KnowledgeBase kb;
  TemplateRegistry templates;
  World() {
    test::load_axioms(axioms);
    test::load_kb(kb);
    test::load_templates(templates);
  }
  TaskGenerator gen() const { return TaskGenerator(axioms, kb, templates); }
};

double gold_value(const InstructionTask& t) { return std::get<NumericGold>(t.gold->payload()).value; }

// Independent residual: bind sampled values plus the gold and evaluate both sides.
double residual_oracle(const FinancialAxiom& ax, const InstructionTask& t) {
  expr::Bindings b;
  for (const auto& [k, v] : t.derivation->sampled_values) b[k] = v;
  b[t.derivation->hidden_symbol] = gold_value(t);
  const double lhs = b.at(ax.relation.lhs);
  const double rhs = expr::evaluate(ax.relation.rhs, b);
  return std::fabs(lhs - rhs) / std::max(1.0, std::fabs(lhs));
}

}  // namespace

TEST_CASE("register_axiom accepts identities and rejects malformed definitions") {
  AxiomRegistry reg;
  CHECK(reg.register_axiom(identity()) == AxiomId("acct"));
  CHECK(reg.register_axiom(identity()) == AxiomId("acct"));  // idempotent
  CHECK(reg.size() == 1);

  FinancialAxiom changed = identity();
  changed.name = "other";
  CHECK_THROWS_AS(reg.register_axiom(changed), Error);

  FinancialAxiom dup = identity();
  dup.id = AxiomId("dup");
  dup.variables.push_back(dup.variables[0]);
  CHECK_THROWS_AS(reg.register_axiom(dup), Error);

  FinancialAxiom undeclared = identity();
  undeclared.id = AxiomId("undeclared");
  undeclared.relation = expr::parse_relation("(= assets (+ liabilities equity goodwill))");
  CHECK_THROWS_AS(reg.register_axiom(undeclared), Error);

  FinancialAxiom one_var;
  one_var.id = AxiomId("one");
  one_var.variables = {{"x", "", VarUnit::count, {0, 1}, SignConstraint::any}};
  one_var.relation = expr::parse_relation("(= x 1)");
  CHECK_THROWS_AS(reg.register_axiom(one_var), Error);

  FinancialAxiom empty_range = identity();
  empty_range.id = AxiomId("empty");
  empty_range.variables[0].range = {5, 1};
  CHECK_THROWS_AS(reg.register_axiom(empty_range), Error);

  World w;
  CHECK(w.axioms.contains(AxiomId("capm")));
  CHECK(w.axioms.contains(AxiomId("accounting_identity")));
  CHECK(w.axioms.size() >= 10);
}

TEST_CASE("deduction golds from fixed values") {
  World w;
  const TaskGenerator gen = w.gen();

  AxiomRegistry reg;
  reg.register_axiom(identity());
  const TaskGenerator small(reg, w.kb, w.templates);
  const auto t = small.deduction_task_from_values(reg.get(AxiomId("acct")), "liabilities",
                                                  {{"assets", 100}, {"equity", 40}});
  CHECK(gold_value(t) == doctest::Approx(60).epsilon(1e-12));
  CHECK(t.level == VerificationLevel::L1);
  CHECK(t.gold->method() == GoldMethod::axiom);
  CHECK(t.prompt.find("Liabilities") != std::string::npos);

  const auto& capm = w.axioms.get(AxiomId("capm"));
  const auto er = gen.deduction_task_from_values(capm, "E_R", {{"R_f", 5}, {"beta", 1.1}, {"R_m", 12}});
  CHECK(match_answer("12.7%", *er.gold));
  CHECK(std::fabs(gold_value(er) - 12.7) < 1e-12);

  // beta = (E_R - R_f) / (R_m - R_f)
  const auto b = gen.deduction_task_from_values(capm, "beta", {{"E_R", 13.4}, {"R_f", 5}, {"R_m", 12}});
  const double beta_oracle = (13.4 - 5.0) / (12.0 - 5.0);
  CHECK(std::fabs(gold_value(b) - beta_oracle) < 1e-12);
  CHECK(std::fabs(gold_value(b) - 1.2) < 1e-12);
  CHECK(residual_oracle(capm, b) < 1e-9);

  // R_f occurs twice: R_f = (E_R - beta R_m) / (1 - beta), solved by bisection.
  const auto rf = gen.deduction_task_from_values(capm, "R_f", {{"E_R", 12.7}, {"beta", 1.1}, {"R_m", 12}});
  const double rf_oracle = (12.7 - 1.1 * 12.0) / (1.0 - 1.1);
  CHECK(std::fabs(gold_value(rf) - rf_oracle) < 1e-8);
  CHECK(residual_oracle(capm, rf) < 1e-9);
}

TEST_CASE("deduction errors") {
  World w;
  const TaskGenerator gen = w.gen();
  CHECK_THROWS_AS(gen.deduction_task(AxiomId("capm"), "gamma", 1), Error);
  CHECK_THROWS_AS(gen.deduction_task(AxiomId("no_such_axiom"), "x", 1), Error);
  const auto& capm = w.axioms.get(AxiomId("capm"));
  // beta would have to be 100: outside its declared range
  CHECK_THROWS_AS(gen.deduction_task_from_values(capm, "beta", {{"E_R", 60}, {"R_f", 5}, {"R_m", 5.55}}), Error);
}

TEST_CASE("axiom-gold residual and determinism over every axiom and symbol") {
  World w;
  const TaskGenerator gen = w.gen();
  std::size_t generated = 0;
  for (const auto& id : w.axioms.ids()) {
    const auto& ax = w.axioms.get(id);
    for (const auto& v : ax.variables) {
      for (std::uint64_t seed = 1; seed <= 12; ++seed) {
        InstructionTask t;
        try {
          t = gen.deduction_task(id, v.symbol, seed);
        } catch (const Error& e) {
          CHECK(e.code() == ErrorCode::precondition);
          continue;
        }
        ++generated;
        CAPTURE(id.str());
        CAPTURE(v.symbol);
        CHECK(residual_oracle(ax, t) <= 1e-9);
        CHECK(relation_residual(ax, [&] {
                expr::Bindings b(t.derivation->sampled_values.begin(), t.derivation->sampled_values.end());
                b[v.symbol] = gold_value(t);
                return b;
              }()) <= 1e-9);
        CHECK(gen.deduction_task(id, v.symbol, seed) == t);
        const double g = gold_value(t);
        CHECK(v.range.contains(g));
        for (const auto& [sym, val] : t.derivation->sampled_values) {
          CHECK(t.prompt.find(format_value(val, ax.variable(sym).unit)) != std::string::npos);
        }
      }
    }
  }
  CHECK(generated > 300);
  CHECK(gen.deduction_task(AxiomId("capm"), "E_R", 1) != gen.deduction_task(AxiomId("capm"), "E_R", 2));
}

TEST_CASE("value rounding by unit") {
  CHECK(round_for_unit(12.3456, VarUnit::currency) == doctest::Approx(12.35));
  CHECK(round_for_unit(12.3456, VarUnit::percent) == doctest::Approx(12.3));
  CHECK(format_value(12.5, VarUnit::percent) == "12.5%");
}

TEST_CASE("knowledge tasks inject every selected point") {
  World w;
  const TaskGenerator gen = w.gen();
  PointSelector banking;
  banking.domain = DomainTag::banking;
  const auto t = gen.knowledge_task(banking, 3, TemplateId("tpl-compliance-judgement"), TaskType::compliance, 5);
  const auto& prov = std::get<KnowledgeProvenance>(t.provenance);
  REQUIRE(prov.points.size() == 3);
  CHECK(std::set<PointId>(prov.points.begin(), prov.points.end()).size() == 3);
  for (const auto& id : prov.points) {
    CHECK(w.kb.get(id).domain == DomainTag::banking);
    CHECK(t.prompt.find(w.kb.get(id).content) != std::string::npos);
  }
  CHECK(prov.template_id == TemplateId("tpl-compliance-judgement"));
  CHECK(t.level == VerificationLevel::unverified);
  CHECK_FALSE(t.gold.has_value());

  CHECK(same_content(t, gen.knowledge_task(banking, 3, TemplateId("tpl-compliance-judgement"),
                                           TaskType::compliance, 5)));

  for (int n : {3, 4, 5}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto k = gen.knowledge_task({}, n, TemplateId("tpl-intent"), TaskType::intent, seed);
      const auto& p = std::get<KnowledgeProvenance>(k.provenance);
      CHECK(p.points.size() == static_cast<std::size_t>(n));
      for (const auto& id : p.points) CHECK(k.prompt.find(w.kb.get(id).content) != std::string::npos);
    }
  }
}

TEST_CASE("knowledge task errors") {
  World w;
  const TaskGenerator gen = w.gen();
  PointSelector banking;
  banking.domain = DomainTag::banking;
  const TemplateId tpl("tpl-compliance-judgement");
  for (int n : {2, 6}) {
    try {
      gen.knowledge_task(banking, n, tpl, TaskType::compliance, 1);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::invalid_argument);
    }
  }
  PointSelector narrow;
  narrow.tag = "aml";
  try {
    gen.knowledge_task(narrow, 3, tpl, TaskType::compliance, 1);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::precondition);
  }
  CHECK_THROWS_AS(gen.knowledge_task(banking, 3, TemplateId("nope"), TaskType::compliance, 1), Error);
  CHECK_THROWS_AS(gen.knowledge_task(banking, 3, tpl, TaskType::intent, 1), Error);
}

TEST_CASE("evolution strategies") {
  World w;
  const TaskGenerator gen = w.gen();
  InstructionTask parent = gen.deduction_task(AxiomId("accounting_identity"), "L", 3);
  parent.id = TaskId("p");

  SUBCASE("add_distractor keeps the gold") {
    const auto child = gen.evolve(parent, {EvolutionKind::add_distractor, {{"label", "Revenue"}, {"value", "250"}}}, 1);
    CHECK(child.gold == parent.gold);
    CHECK(child.prompt.find("Revenue") != std::string::npos);
    CHECK(child.prompt != parent.prompt);
    const auto& ev = std::get<EvolvedProvenance>(child.provenance);
    CHECK(ev.parent == TaskId("p"));
    CHECK(ev.strategy.kind == EvolutionKind::add_distractor);
    CHECK(child.derivation == parent.derivation);
    for (std::uint64_t s = 0; s < 10; ++s) {
      CHECK(gen.evolve(parent, {EvolutionKind::add_distractor, {}}, s).gold == parent.gold);
    }
  }

  SUBCASE("transform_format preserves the normalized gold both ways") {
    const auto mc = gen.evolve(parent, {EvolutionKind::transform_format, {{"to", "multiple_choice"}}}, 4);
    CHECK(mc.format == AnswerFormat::multiple_choice);
    CHECK(mc.options.size() == 4);
    REQUIRE(mc.gold.has_value());
    const double g = gold_value(parent);
    CHECK(gold_value(mc) == g);
    // Exactly one option letter resolves to text matching the gold.
    int correct = 0;
    for (std::size_t i = 0; i < mc.options.size(); ++i) {
      const std::string letter(1, static_cast<char>('A' + i));
      if (match_answer(resolve_choice(mc, letter), *mc.gold)) ++correct;
    }
    CHECK(correct == 1);

    InstructionTask mc_stored = mc;
    mc_stored.id = TaskId("mc");
    const auto back = gen.evolve(mc_stored, {EvolutionKind::transform_format, {{"to", "fill_in"}}}, 4);
    CHECK(back.format == AnswerFormat::open);
    CHECK(back.options.empty());
    CHECK(back.prompt.find("Options:") == std::string::npos);
    const auto na = normalize_answer(format_value(gold_value(back), VarUnit::currency));
    const auto nb = normalize_answer(format_value(g, VarUnit::currency));
    CHECK(answers_equivalent(na, nb));
    InstructionTask back_stored = back;
    back_stored.id = TaskId("back");
    CHECK_THROWS_AS(gen.evolve(back_stored, {EvolutionKind::transform_format, {{"to", "fill_in"}}}, 4), Error);
    CHECK_THROWS_AS(gen.evolve(mc_stored, {EvolutionKind::transform_format, {{"to", "multiple_choice"}}}, 4), Error);

    InstructionTask no_gold = parent;
    no_gold.gold.reset();
    CHECK_THROWS_AS(gen.evolve(no_gold, {EvolutionKind::transform_format, {{"to", "multiple_choice"}}}, 1), Error);
    CHECK_THROWS_AS(gen.evolve(parent, {EvolutionKind::transform_format, {{"to", "essay"}}}, 1), Error);
  }

  SUBCASE("add_constraint re-mints through the harder variant") {
    InstructionTask roe = gen.deduction_task(AxiomId("roe"), "ROE", 2);
    roe.id = TaskId("roe-1");
    AxiomRegistry& reg = w.axioms;
    const auto child = gen.evolve(roe, {EvolutionKind::add_constraint, {}}, 9, &reg);
    REQUIRE(child.derivation.has_value());
    CHECK(child.derivation->axiom == AxiomId("roe_two_period"));
    CHECK(child.level == VerificationLevel::L1);
    CHECK(child.gold->method() == GoldMethod::axiom);
    CHECK(residual_oracle(reg.get(AxiomId("roe_two_period")), child) <= 1e-9);

    // Axioms without a registered variant get a composed two-period version.
    InstructionTask gm = gen.deduction_task(AxiomId("gross_margin"), "GM", 2);
    gm.id = TaskId("gm-1");
    const auto composed = gen.evolve(gm, {EvolutionKind::add_constraint, {}}, 9, &reg);
    CHECK(composed.derivation->axiom == AxiomId("gross_margin@2p"));
    CHECK(reg.contains(AxiomId("gross_margin@2p")));
    CHECK(residual_oracle(reg.get(AxiomId("gross_margin@2p")), composed) <= 1e-9);

    InstructionTask kt = gen.knowledge_task({}, 3, TemplateId("tpl-intent"), TaskType::intent, 1);
    kt.id = TaskId("k");
    CHECK_THROWS_AS(gen.evolve(kt, {EvolutionKind::add_constraint, {}}, 1, &reg), Error);
  }

  SUBCASE("determinism and parent requirement") {
    const EvolutionStrategy s{EvolutionKind::add_distractor, {}};
    CHECK(gen.evolve(parent, s, 7) == gen.evolve(parent, s, 7));
    InstructionTask unsaved = parent;
    unsaved.id = TaskId();
    CHECK_THROWS_AS(gen.evolve(unsaved, s, 7), Error);
  }
}

TEST_CASE("two-period composition") {
  World w;
  const auto two = compose_two_period(w.axioms.get(AxiomId("gross_margin")));
  CHECK(two.id == AxiomId("gross_margin@2p"));
  CHECK(two.relation.lhs == "GM_total");
  expr::Bindings b{{"Rev_p1", 100}, {"COGS_p1", 60}, {"Rev_p2", 200}, {"COGS_p2", 50}};
  // 100 * 40/100 + 100 * 150/200
  CHECK(expr::evaluate(two.relation.rhs, b) == doctest::Approx(40.0 + 75.0));
  CHECK_NOTHROW(validate_axiom(two));
}

TEST_CASE("diagnose_weakness clusters failures per tag") {
  std::vector<InstructionTask> tasks;
  const DomainTag domains[] = {DomainTag::banking, DomainTag::securities, DomainTag::insurance,
                               DomainTag::accounting, DomainTag::macroeconomics};
  for (auto d : domains) {
    InstructionTask fail;
    fail.task_type = TaskType::table_reasoning;
    fail.domain = d;
    tasks.push_back(fail);
    InstructionTask ok;
    ok.task_type = TaskType::calculation;
    ok.domain = d;
    tasks.push_back(ok);
  }
  std::vector<ScoredResult> results;
  for (const auto& t : tasks) results.push_back({&t, t.task_type == TaskType::table_reasoning ? 0.0 : 1.0});
  const auto report = diagnose_weakness(results);

  // Oracle: failure counts per tag by direct tally.
  std::map<std::string, std::pair<int, int>> tally;
  for (const auto& r : results) {
    for (const std::string tag : {std::string(enum_name(r.task->task_type)), std::string(enum_name(r.task->domain))}) {
      tally[tag].second++;
      if (r.reward < 1.0) tally[tag].first++;
    }
  }
  std::size_t expected_clusters = 0;
  for (const auto& [tag, fa] : tally) expected_clusters += fa.first > 0 ? 1 : 0;
  REQUIRE(report.clusters.size() == expected_clusters);
  CHECK(report.clusters[0].tag == "table_reasoning");
  CHECK(report.clusters[0].failure_rate == 1.0);
  CHECK(report.clusters[1].failure_rate < 1.0);
  for (std::size_t i = 0; i < report.clusters.size(); ++i) {
    const auto& c = report.clusters[i];
    CHECK(c.failure_count == static_cast<std::size_t>(tally[c.tag].first));
    CHECK(c.failure_rate == doctest::Approx(double(tally[c.tag].first) / tally[c.tag].second));
    if (i > 0) CHECK(report.clusters[i - 1].failure_rate >= c.failure_rate);
  }

  std::vector<ScoredResult> all_pass;
  for (const auto& t : tasks) all_pass.push_back({&t, 1.0});
  CHECK(diagnose_weakness(all_pass).clusters.empty());
  CHECK(diagnose_weakness({}).clusters.empty());
}
