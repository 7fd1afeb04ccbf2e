#include "finforge/expr.hpp"

#include <cctype>
#include <charconv>
#include <vector>

#include "finforge/core.hpp"

namespace finforge::expr {

Expr Expr::constant(double value) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::constant;
  n->value = value;
  return Expr(std::move(n));
}

Expr Expr::symbol(std::string name) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::symbol;
  n->symbol = std::move(name);
  return Expr(std::move(n));
}

Expr Expr::binary(Op op, Expr lhs, Expr rhs) {
  if (!lhs.valid() || !rhs.valid()) {
    throw Error(ErrorCode::internal, "binary expression with empty operand");
  }
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::binary;
  n->op = op;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return Expr(std::move(n));
}

const Node& Expr::node() const {
  if (!node_) throw Error(ErrorCode::internal, "empty expression");
  return *node_;
}

namespace {

struct Token {
  enum class Kind { open, close, atom } kind;
  std::string text;
};

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '(') {
      out.push_back({Token::Kind::open, "("});
      ++i;
    } else if (c == ')') {
      out.push_back({Token::Kind::close, ")"});
      ++i;
    } else {
      std::size_t j = i;
      while (j < text.size() && text[j] != '(' && text[j] != ')' &&
             !std::isspace(static_cast<unsigned char>(text[j]))) {
        ++j;
      }
      out.push_back({Token::Kind::atom, std::string(text.substr(i, j - i))});
      i = j;
    }
  }
  return out;
}

bool parse_number(std::string_view s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool valid_symbol(std::string_view s) {
  if (s.empty()) return false;
  if (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_') return false;
  for (char c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '.' && c != '@') {
      return false;
    }
  }
  return true;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : source_(text), tokens_(tokenize(text)) {}

  Expr parse_expr() {
    const Token& t = take();
    if (t.kind == Token::Kind::close) fail("unexpected ')'");
    if (t.kind == Token::Kind::atom) {
      double v = 0.0;
      if (parse_number(t.text, v)) return Expr::constant(v);
      if (!valid_symbol(t.text)) fail("invalid symbol '" + t.text + "'");
      return Expr::symbol(t.text);
    }
    const Token& head = take();
    if (head.kind != Token::Kind::atom) fail("expected operator after '('");
    Op op{};
    if (head.text == "+") op = Op::add;
    else if (head.text == "-") op = Op::sub;
    else if (head.text == "*") op = Op::mul;
    else if (head.text == "/") op = Op::div;
    else fail("unknown operator '" + head.text + "'");

    std::vector<Expr> args;
    while (peek().kind != Token::Kind::close) args.push_back(parse_expr());
    take();  // ')'

    if (args.empty()) fail("operator '" + head.text + "' without operands");
    if (args.size() == 1) {
      if (op == Op::sub) return Expr::binary(Op::sub, Expr::constant(0.0), args[0]);
      if (op == Op::add || op == Op::mul) return args[0];
      fail("'/' needs two operands");
    }
    if ((op == Op::sub || op == Op::div) && args.size() != 2) {
      fail("'" + head.text + "' takes exactly two operands");
    }
    Expr acc = args[0];
    for (std::size_t i = 1; i < args.size(); ++i) acc = Expr::binary(op, acc, args[i]);
    return acc;
  }

  Relation parse_relation() {
    if (take().kind != Token::Kind::open) fail("relation must start with '('");
    const Token& eq = take();
    if (eq.kind != Token::Kind::atom || eq.text != "=") fail("relation must be (= lhs expr)");
    const Token& lhs = take();
    if (lhs.kind != Token::Kind::atom || !valid_symbol(lhs.text)) {
      fail("relation left-hand side must be a symbol");
    }
    Relation r{lhs.text, parse_expr()};
    if (take().kind != Token::Kind::close) fail("expected ')' closing relation");
    return r;
  }

  void expect_end() {
    if (pos_ != tokens_.size()) fail("trailing tokens");
  }

 private:
  const Token& peek() {
    if (pos_ >= tokens_.size()) fail("unexpected end of expression");
    return tokens_[pos_];
  }
  const Token& take() {
    const Token& t = peek();
    ++pos_;
    return t;
  }
  [[noreturn]] void fail(const std::string& why) {
    throw Error(ErrorCode::malformed, "expression parse error: " + why, std::string(source_));
  }

  std::string_view source_;
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

std::string format_constant(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

char op_char(Op op) {
  switch (op) {
    case Op::add: return '+';
    case Op::sub: return '-';
    case Op::mul: return '*';
    case Op::div: return '/';
  }
  return '?';
}

int precedence(Op op) { return (op == Op::add || op == Op::sub) ? 1 : 2; }

std::string infix(const Expr& e, const std::map<std::string, std::string>& labels,
                  int parent_prec, bool right_side) {
  const Node& n = e.node();
  switch (n.kind) {
    case Node::Kind::constant: return format_constant(n.value);
    case Node::Kind::symbol: {
      auto it = labels.find(n.symbol);
      return it == labels.end() ? n.symbol : it->second;
    }
    case Node::Kind::binary: break;
  }
  const int prec = precedence(n.op);
  std::string s = infix(n.lhs, labels, prec, false) + ' ' +
                  (n.op == Op::mul ? std::string("×") : std::string(1, op_char(n.op))) +
                  ' ' + infix(n.rhs, labels, prec, true);
  const bool non_assoc = n.op == Op::sub || n.op == Op::div;
  if (prec < parent_prec || (prec == parent_prec && right_side && non_assoc) ||
      (prec == parent_prec && right_side && parent_prec == 2)) {
    return '(' + s + ')';
  }
  return s;
}

}  // namespace

Expr parse(std::string_view text) {
  Parser p(text);
  Expr e = p.parse_expr();
  p.expect_end();
  return e;
}

Relation parse_relation(std::string_view text) {
  Parser p(text);
  Relation r = p.parse_relation();
  p.expect_end();
  return r;
}

std::string to_prefix(const Expr& e) {
  const Node& n = e.node();
  switch (n.kind) {
    case Node::Kind::constant: return format_constant(n.value);
    case Node::Kind::symbol: return n.symbol;
    case Node::Kind::binary:
      return std::string("(") + op_char(n.op) + ' ' + to_prefix(n.lhs) + ' ' +
             to_prefix(n.rhs) + ')';
  }
  return {};
}

std::string to_prefix(const Relation& r) { return "(= " + r.lhs + ' ' + to_prefix(r.rhs) + ')'; }

std::string to_infix(const Expr& e, const std::map<std::string, std::string>& labels) {
  return infix(e, labels, 0, false);
}

double evaluate(const Expr& e, const Bindings& bindings) {
  const Node& n = e.node();
  switch (n.kind) {
    case Node::Kind::constant: return n.value;
    case Node::Kind::symbol: {
      auto it = bindings.find(n.symbol);
      if (it == bindings.end()) {
        throw Error(ErrorCode::invalid_argument, "unbound symbol '" + n.symbol + "'");
      }
      return it->second;
    }
    case Node::Kind::binary: {
      const double a = evaluate(n.lhs, bindings);
      const double b = evaluate(n.rhs, bindings);
      switch (n.op) {
        case Op::add: return a + b;
        case Op::sub: return a - b;
        case Op::mul: return a * b;
        case Op::div: return a / b;
      }
    }
  }
  return 0.0;
}

std::size_t count_symbol(const Expr& e, std::string_view symbol) {
  const Node& n = e.node();
  switch (n.kind) {
    case Node::Kind::constant: return 0;
    case Node::Kind::symbol: return n.symbol == symbol ? 1 : 0;
    case Node::Kind::binary: return count_symbol(n.lhs, symbol) + count_symbol(n.rhs, symbol);
  }
  return 0;
}

std::set<std::string> symbols(const Expr& e) {
  std::set<std::string> out;
  const Node& n = e.node();
  if (n.kind == Node::Kind::symbol) {
    out.insert(n.symbol);
  } else if (n.kind == Node::Kind::binary) {
    out.merge(symbols(n.lhs));
    out.merge(symbols(n.rhs));
  }
  return out;
}

Expr rename(const Expr& e, const std::map<std::string, std::string>& mapping) {
  const Node& n = e.node();
  switch (n.kind) {
    case Node::Kind::constant: return e;
    case Node::Kind::symbol: {
      auto it = mapping.find(n.symbol);
      return it == mapping.end() ? e : Expr::symbol(it->second);
    }
    case Node::Kind::binary:
      return Expr::binary(n.op, rename(n.lhs, mapping), rename(n.rhs, mapping));
  }
  return e;
}

}  // namespace finforge::expr
