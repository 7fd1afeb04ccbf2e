#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>

namespace finforge::expr {

enum class Op { add, sub, mul, div };

struct Node;

/// Immutable arithmetic expression tree over named symbols. Copies share
/// structure.
class Expr {
 public:
  Expr() = default;

  static Expr constant(double value);
  static Expr symbol(std::string name);
  static Expr binary(Op op, Expr lhs, Expr rhs);

  bool valid() const noexcept { return node_ != nullptr; }
  const Node& node() const;

 private:
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

struct Node {
  enum class Kind { constant, symbol, binary };
  Kind kind = Kind::constant;
  double value = 0.0;
  std::string symbol;
  Op op = Op::add;
  Expr lhs;
  Expr rhs;
};

using Bindings = std::map<std::string, double, std::less<>>;

/// `lhs = rhs`, where lhs is a single distinguished symbol.
struct Relation {
  std::string lhs;
  Expr rhs;
};

/// Parses prefix notation: `(+ a b c)`, `(- x)`, `(* 1.1 beta)`, `42`, `sym`.
/// `+` and `*` fold left over any number of operands.
Expr parse(std::string_view text);
/// Parses `(= lhs expr)`.
Relation parse_relation(std::string_view text);

std::string to_prefix(const Expr& e);
std::string to_prefix(const Relation& r);
/// Human-readable infix rendering with minimal parentheses.
std::string to_infix(const Expr& e, const std::map<std::string, std::string>& labels = {});

/// Throws Error(invalid_argument) on an unbound symbol. Division by zero
/// yields a non-finite value.
double evaluate(const Expr& e, const Bindings& bindings);

std::size_t count_symbol(const Expr& e, std::string_view symbol);
std::set<std::string> symbols(const Expr& e);
Expr rename(const Expr& e, const std::map<std::string, std::string>& mapping);

}  // namespace finforge::expr
