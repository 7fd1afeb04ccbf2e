#include <cmath>

#include "doctest.h"
#include "finforge/core.hpp"
#include "finforge/expr.hpp"

using namespace finforge;
using namespace finforge::expr;

TEST_CASE("prefix parse and print round-trip") {
  for (const char* src : {"(+ a b)", "(* 1.1 beta)", "(- R_m R_f)", "(/ (- NI PD) N)", "42", "x", "(- x)",
                          "(+ R_f (* beta (- R_m R_f)))"}) {
    const Expr e = parse(src);
    CHECK(to_prefix(parse(to_prefix(e))) == to_prefix(e));
  }
  const Relation r = parse_relation("(= A (+ L E))");
  CHECK(r.lhs == "A");
  CHECK(to_prefix(r) == "(= A (+ L E))");
}

TEST_CASE("evaluation") {
  const Expr capm = parse("(+ R_f (* beta (- R_m R_f)))");
  Bindings b{{"R_f", 5.0}, {"beta", 1.1}, {"R_m", 12.0}};
  // 5 + 1.1 * 7
  CHECK(evaluate(capm, b) == doctest::Approx(12.7).epsilon(1e-12));
  CHECK(evaluate(parse("(+ 1 2 3)"), {}) == 6.0);
  CHECK(evaluate(parse("(- 4)"), {}) == -4.0);
  CHECK_FALSE(std::isfinite(evaluate(parse("(/ 1 x)"), Bindings{{"x", 0.0}})));
  CHECK_THROWS_AS(evaluate(capm, Bindings{{"R_f", 1.0}}), Error);
}

TEST_CASE("symbol queries and renaming") {
  const Expr e = parse("(+ R_f (* beta (- R_m R_f)))");
  CHECK(count_symbol(e, "R_f") == 2);
  CHECK(count_symbol(e, "beta") == 1);
  CHECK(count_symbol(e, "nope") == 0);
  CHECK(symbols(e) == std::set<std::string>{"R_f", "R_m", "beta"});
  const Expr r = rename(e, {{"R_f", "rf"}});
  CHECK(to_prefix(r) == "(+ rf (* beta (- R_m rf)))");
}

TEST_CASE("malformed expressions are rejected") {
  for (const char* bad : {"", "(", "(+ a", "(- a b c)", "(^ a b)", "(= a b)", "a b", "(+)", ")"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(parse(bad), Error);
  }
  CHECK_THROWS_AS(parse_relation("(+ a b)"), Error);
  CHECK_THROWS_AS(parse_relation("(= 3 b)"), Error);
}

TEST_CASE("infix rendering keeps meaning") {
  const Expr e = parse("(- a (- b c))");
  const std::string s = to_infix(e);
  CHECK(s.find('(') != std::string::npos);
  CHECK(to_infix(parse("(+ a (* b c))")).find('(') == std::string::npos);
}
