#include "finforge/kbgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <numeric>
#include <set>

#include "finforge/ruleverify.hpp"

namespace finforge {

const AxiomVariable& FinancialAxiom::variable(std::string_view symbol) const {
  for (const auto& v : variables) {
    if (v.symbol == symbol) return v;
  }
  throw Error(ErrorCode::invalid_argument,
              "symbol '" + std::string(symbol) + "' is not a variable of axiom " + id.str());
}

void validate_axiom(const FinancialAxiom& axiom) {
  if (axiom.id.empty()) throw Error(ErrorCode::invalid_argument, "axiom without id");
  std::set<std::string> declared;
  for (const auto& v : axiom.variables) {
    if (!declared.insert(v.symbol).second) {
      throw Error(ErrorCode::invalid_argument,
                  "duplicate symbol '" + v.symbol + "' in axiom " + axiom.id.str());
    }
    if (!(v.range.lo <= v.range.hi) || !std::isfinite(v.range.lo) || !std::isfinite(v.range.hi)) {
      throw Error(ErrorCode::invalid_argument,
                  "empty range for '" + v.symbol + "' in axiom " + axiom.id.str());
    }
  }
  if (!axiom.relation.rhs.valid()) {
    throw Error(ErrorCode::invalid_argument, "axiom " + axiom.id.str() + " has no relation");
  }
  std::set<std::string> used = expr::symbols(axiom.relation.rhs);
  used.insert(axiom.relation.lhs);
  for (const auto& s : used) {
    if (!declared.contains(s)) {
      throw Error(ErrorCode::invalid_argument,
                  "relation of axiom " + axiom.id.str() + " references undeclared symbol '" + s + "'");
    }
  }
  for (const auto& s : declared) {
    if (!used.contains(s)) {
      throw Error(ErrorCode::invalid_argument,
                  "variable '" + s + "' of axiom " + axiom.id.str() + " is not used by its relation");
    }
  }
  if (used.size() < 2) {
    throw Error(ErrorCode::invalid_argument,
                "relation of axiom " + axiom.id.str() + " must reference at least two variables");
  }
}

bool same_definition(const FinancialAxiom& a, const FinancialAxiom& b) {
  return a.id == b.id && a.name == b.name && a.variables == b.variables &&
         a.relation.lhs == b.relation.lhs &&
         expr::to_prefix(a.relation.rhs) == expr::to_prefix(b.relation.rhs) &&
         a.domain == b.domain && a.harder_variant == b.harder_variant && a.tags == b.tags;
}

FinancialAxiom compose_two_period(const FinancialAxiom& base) {
  FinancialAxiom out;
  out.id = AxiomId(base.id.str() + "@2p");
  out.name = base.name + " (two-period total)";
  out.domain = base.domain;
  out.tags = base.tags;
  out.tags.push_back("multi_period");

  const AxiomVariable& lhs = base.variable(base.relation.lhs);
  std::map<std::string, std::string> p1;
  std::map<std::string, std::string> p2;
  for (const auto& v : base.variables) {
    if (v.symbol == base.relation.lhs) continue;
    p1[v.symbol] = v.symbol + "_p1";
    p2[v.symbol] = v.symbol + "_p2";
  }
  for (const auto& v : base.variables) {
    if (v.symbol == base.relation.lhs) continue;
    for (int period : {1, 2}) {
      AxiomVariable copy = v;
      copy.symbol = v.symbol + (period == 1 ? "_p1" : "_p2");
      copy.label = (v.label.empty() ? v.symbol : v.label) + " (period " + std::to_string(period) + ")";
      out.variables.push_back(std::move(copy));
    }
  }
  AxiomVariable total = lhs;
  total.symbol = lhs.symbol + "_total";
  total.label = (lhs.label.empty() ? lhs.symbol : lhs.label) + " (two-period total)";
  total.range = {std::min(2 * lhs.range.lo, lhs.range.lo), std::max(2 * lhs.range.hi, lhs.range.hi)};
  out.variables.insert(out.variables.begin(), total);

  out.relation.lhs = total.symbol;
  out.relation.rhs = expr::Expr::binary(expr::Op::add, expr::rename(base.relation.rhs, p1),
                                        expr::rename(base.relation.rhs, p2));
  validate_axiom(out);
  return out;
}

AxiomId AxiomRegistry::register_axiom(FinancialAxiom definition) {
  validate_axiom(definition);
  std::unique_lock lock(mu_);
  auto it = axioms_.find(definition.id);
  if (it != axioms_.end()) {
    if (same_definition(it->second, definition)) return definition.id;
    throw Error(ErrorCode::conflict,
                "axiom " + definition.id.str() + " already registered with a different definition");
  }
  AxiomId id = definition.id;
  axioms_.emplace(id, std::move(definition));
  return id;
}

const FinancialAxiom& AxiomRegistry::get(const AxiomId& id) const {
  std::shared_lock lock(mu_);
  auto it = axioms_.find(id);
  if (it == axioms_.end()) throw Error(ErrorCode::not_found, "unknown axiom " + id.str());
  return it->second;
}

bool AxiomRegistry::contains(const AxiomId& id) const {
  std::shared_lock lock(mu_);
  return axioms_.contains(id);
}

std::vector<AxiomId> AxiomRegistry::ids() const {
  std::shared_lock lock(mu_);
  std::vector<AxiomId> out;
  for (const auto& [id, _] : axioms_) out.push_back(id);
  return out;
}

std::size_t AxiomRegistry::size() const {
  std::shared_lock lock(mu_);
  return axioms_.size();
}

void TemplateRegistry::add(InstructionTemplate tmpl) {
  if (tmpl.id.empty() || tmpl.text.empty()) {
    throw Error(ErrorCode::invalid_argument, "template needs an id and text");
  }
  if (templates_.contains(tmpl.id)) {
    throw Error(ErrorCode::conflict, "duplicate template " + tmpl.id.str());
  }
  templates_.emplace(tmpl.id, std::move(tmpl));
}

const InstructionTemplate& TemplateRegistry::get(const TemplateId& id) const {
  auto it = templates_.find(id);
  if (it == templates_.end()) throw Error(ErrorCode::invalid_argument, "unknown template " + id.str());
  return it->second;
}

bool TemplateRegistry::contains(const TemplateId& id) const { return templates_.contains(id); }

void KnowledgeBase::add(KnowledgePoint point) {
  if (point.id.empty()) throw Error(ErrorCode::invalid_argument, "knowledge point without id");
  if (point.content.empty()) {
    throw Error(ErrorCode::invalid_argument, "knowledge point " + point.id.str() + " has no content");
  }
  if (points_.contains(point.id)) {
    throw Error(ErrorCode::conflict, "duplicate knowledge point " + point.id.str());
  }
  points_.emplace(point.id, std::move(point));
}

const KnowledgePoint& KnowledgeBase::get(const PointId& id) const {
  auto it = points_.find(id);
  if (it == points_.end()) throw Error(ErrorCode::not_found, "unknown knowledge point " + id.str());
  return it->second;
}

std::vector<const KnowledgePoint*> KnowledgeBase::select(const PointSelector& selector) const {
  std::vector<const KnowledgePoint*> out;
  for (const auto& [id, p] : points_) {
    if (selector.domain && p.domain != *selector.domain) continue;
    if (selector.tag && std::find(p.tags.begin(), p.tags.end(), *selector.tag) == p.tags.end()) {
      continue;
    }
    if (selector.contains && p.content.find(*selector.contains) == std::string::npos) continue;
    out.push_back(&p);
  }
  return out;
}

namespace {

// Walks from the root towards the single occurrence of `hidden`, undoing
// one operation per level.
std::optional<double> invert(const expr::Expr& e, std::string_view hidden, double target,
                             const expr::Bindings& bound) {
  const expr::Node& n = e.node();
  if (n.kind == expr::Node::Kind::symbol) {
    return n.symbol == hidden ? std::optional<double>(target) : std::nullopt;
  }
  if (n.kind != expr::Node::Kind::binary) return std::nullopt;
  const bool in_left = expr::count_symbol(n.lhs, hidden) == 1;
  const double other = expr::evaluate(in_left ? n.rhs : n.lhs, bound);
  double next = 0.0;
  switch (n.op) {
    case expr::Op::add: next = target - other; break;
    case expr::Op::sub: next = in_left ? target + other : other - target; break;
    case expr::Op::mul:
      if (other == 0.0) return std::nullopt;
      next = target / other;
      break;
    case expr::Op::div:
      if (in_left) {
        next = target * other;
      } else {
        if (target == 0.0) return std::nullopt;
        next = other / target;
      }
      break;
  }
  if (!std::isfinite(next)) return std::nullopt;
  return invert(in_left ? n.lhs : n.rhs, hidden, next, bound);
}

std::optional<double> bisect(const std::function<double(double)>& f, Interval range) {
  constexpr int kGrid = 256;
  double prev_x = range.lo;
  double prev_f = f(prev_x);
  if (prev_f == 0.0) return prev_x;
  for (int i = 1; i <= kGrid; ++i) {
    const double x = range.lo + (range.hi - range.lo) * i / kGrid;
    const double fx = f(x);
    if (fx == 0.0) return x;
    if (std::isfinite(prev_f) && std::isfinite(fx) && std::signbit(prev_f) != std::signbit(fx)) {
      double lo = prev_x;
      double hi = x;
      double flo = prev_f;
      for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, std::fabs(lo)); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if (std::signbit(fm) == std::signbit(flo)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      return 0.5 * (lo + hi);
    }
    prev_x = x;
    prev_f = fx;
  }
  return std::nullopt;
}

bool sign_ok(double v, SignConstraint sign) {
  switch (sign) {
    case SignConstraint::any: return true;
    case SignConstraint::nonneg: return v >= 0.0;
    case SignConstraint::positive: return v > 0.0;
  }
  return true;
}

}  // namespace

std::optional<double> solve_hidden(const FinancialAxiom& axiom, std::string_view hidden,
                                   const expr::Bindings& visible) {
  const AxiomVariable& var = axiom.variable(hidden);
  expr::Bindings bound;
  for (const auto& v : axiom.variables) {
    if (v.symbol == hidden) continue;
    auto it = visible.find(v.symbol);
    if (it == visible.end()) {
      throw Error(ErrorCode::invalid_argument, "missing value for visible variable '" + v.symbol + "'");
    }
    bound[v.symbol] = it->second;
  }

  std::optional<double> x;
  const auto& rel = axiom.relation;
  if (rel.lhs == hidden) {
    x = expr::evaluate(rel.rhs, bound);
  } else if (expr::count_symbol(rel.rhs, hidden) == 1) {
    x = invert(rel.rhs, hidden, bound.at(rel.lhs), bound);
  } else {
    const double target = bound.at(rel.lhs);
    expr::Bindings trial = bound;
    const std::string key(hidden);
    x = bisect(
        [&](double value) {
          trial[key] = value;
          return expr::evaluate(rel.rhs, trial) - target;
        },
        var.range);
  }
  if (!x || !std::isfinite(*x) || !var.range.contains(*x) || !sign_ok(*x, var.sign)) {
    return std::nullopt;
  }
  return x;
}

double relation_residual(const FinancialAxiom& axiom, const expr::Bindings& all) {
  const double lhs = all.at(axiom.relation.lhs);
  const double rhs = expr::evaluate(axiom.relation.rhs, all);
  return std::fabs(lhs - rhs) / std::max(1.0, std::fabs(lhs));
}

double round_for_unit(double value, VarUnit unit) {
  switch (unit) {
    case VarUnit::currency:
    case VarUnit::ratio: return std::round(value * 100.0) / 100.0;
    case VarUnit::percent: return std::round(value * 10.0) / 10.0;
    case VarUnit::count: return std::round(value);
  }
  return value;
}

std::string format_value(double value, VarUnit unit) {
  char buf[64];
  switch (unit) {
    case VarUnit::currency:
    case VarUnit::ratio: std::snprintf(buf, sizeof buf, "%.2f", value); break;
    case VarUnit::percent: std::snprintf(buf, sizeof buf, "%.1f%%", value); break;
    case VarUnit::count: std::snprintf(buf, sizeof buf, "%.0f", value); break;
  }
  return buf;
}

WeaknessReport diagnose_weakness(std::span<const ScoredResult> results, double success_cutoff) {
  std::map<std::string, WeaknessCluster> by_tag;
  for (const auto& r : results) {
    if (r.task == nullptr) throw Error(ErrorCode::precondition, "result without a task");
    std::set<std::string> tags{std::string(enum_name(r.task->task_type)),
                               std::string(enum_name(r.task->domain))};
    tags.insert(r.task->tags.begin(), r.task->tags.end());
    const bool failed = r.reward < success_cutoff;
    for (const auto& t : tags) {
      auto& c = by_tag[t];
      c.tag = t;
      ++c.attempts;
      if (failed) ++c.failure_count;
    }
  }
  WeaknessReport report;
  for (auto& [tag, c] : by_tag) {
    if (c.failure_count == 0) continue;
    c.failure_rate = static_cast<double>(c.failure_count) / static_cast<double>(c.attempts);
    report.clusters.push_back(c);
  }
  std::stable_sort(report.clusters.begin(), report.clusters.end(), [](const auto& a, const auto& b) {
    if (a.failure_rate != b.failure_rate) return a.failure_rate > b.failure_rate;
    if (a.failure_count != b.failure_count) return a.failure_count > b.failure_count;
    return a.tag < b.tag;
  });
  return report;
}

namespace {

std::string label_of(const AxiomVariable& v) { return v.label.empty() ? v.symbol : v.label; }

Tolerance gold_tolerance(VarUnit unit) {
  return unit == VarUnit::percent ? Tolerance{0.01, 1e-4} : Tolerance{0.0, 1e-4};
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

void add_tag(std::vector<std::string>& tags, std::string tag) {
  if (std::find(tags.begin(), tags.end(), tag) == tags.end()) tags.push_back(std::move(tag));
}

}  // namespace

InstructionTask TaskGenerator::deduction_task_from_values(const FinancialAxiom& axiom,
                                                          std::string_view hidden,
                                                          const expr::Bindings& visible) const {
  const AxiomVariable& target = axiom.variable(hidden);
  const auto value = solve_hidden(axiom, hidden, visible);
  if (!value) {
    throw Error(ErrorCode::precondition, "no solution for '" + std::string(hidden) +
                                             "' within its declared range in axiom " + axiom.id.str());
  }

  std::map<std::string, std::string> labels;
  for (const auto& v : axiom.variables) labels[v.symbol] = label_of(v);

  std::string prompt = "Given the following figures:\n";
  AxiomProvenance prov{axiom.id, std::string(hidden), {}};
  for (const auto& v : axiom.variables) {
    if (v.symbol == hidden) continue;
    const double x = visible.at(v.symbol);
    prov.sampled_values[v.symbol] = x;
    prompt += "- " + label_of(v) + ": " + format_value(x, v.unit) + "\n";
  }
  prompt += "Relation (" + axiom.name + "): " + labels[axiom.relation.lhs] + " = " +
            expr::to_infix(axiom.relation.rhs, labels) + "\n";
  prompt += "Question: What is " + label_of(target) + "?";
  if (target.unit == VarUnit::percent) prompt += " Give the answer in percent to two decimals.";

  const Tolerance tol = gold_tolerance(target.unit);
  InstructionTask task;
  task.task_type = TaskType::calculation;
  task.domain = axiom.domain;
  task.prompt = std::move(prompt);
  task.provenance = prov;
  task.derivation = prov;
  task.gold = GoldAnswer(NumericGold{*value, tol.abs, tol.rel}, GoldMethod::axiom);
  task.level = VerificationLevel::L1;
  task.tags = axiom.tags;
  add_tag(task.tags, "axiom:" + axiom.id.str());
  return task;
}

InstructionTask TaskGenerator::deduction_task(const AxiomId& axiom_id, std::string_view hidden,
                                              std::uint64_t seed) const {
  const FinancialAxiom& axiom = axioms_.get(axiom_id);
  axiom.variable(hidden);  // rejects unknown hidden symbols up front

  Rng rng(seed);
  for (int attempt = 0; attempt < kMaxResamples; ++attempt) {
    expr::Bindings visible;
    bool ok = true;
    for (const auto& v : axiom.variables) {
      if (v.symbol == hidden) continue;
      const double x = round_for_unit(rng.uniform(v.range.lo, v.range.hi), v.unit);
      if (!sign_ok(x, v.sign) || !v.range.contains(x)) ok = false;
      visible[v.symbol] = x;
    }
    if (!ok || !solve_hidden(axiom, hidden, visible)) continue;
    return deduction_task_from_values(axiom, hidden, visible);
  }
  throw Error(ErrorCode::precondition,
              "no in-range solution for '" + std::string(hidden) + "' in axiom " + axiom_id.str() +
                  " after " + std::to_string(kMaxResamples) + " resamples");
}

InstructionTask TaskGenerator::knowledge_task(const PointSelector& selector, int n_points,
                                              const TemplateId& template_id, TaskType task_type,
                                              std::uint64_t seed) const {
  if (n_points < 3 || n_points > 5) {
    throw Error(ErrorCode::invalid_argument,
                "n_points must be in [3,5], got " + std::to_string(n_points));
  }
  const InstructionTemplate& tmpl = templates_.get(template_id);
  if (tmpl.task_type != task_type) {
    throw Error(ErrorCode::invalid_argument, "template " + template_id.str() + " is for " +
                                                 std::string(enum_name(tmpl.task_type)) + ", not " +
                                                 std::string(enum_name(task_type)));
  }
  const auto matches = kb_.select(selector);
  if (matches.size() < static_cast<std::size_t>(n_points)) {
    throw Error(ErrorCode::precondition, "selector matches " + std::to_string(matches.size()) +
                                             " points, need " + std::to_string(n_points));
  }

  Rng rng(seed);
  std::vector<std::size_t> order(matches.size());
  std::iota(order.begin(), order.end(), 0);
  for (int k = 0; k < n_points; ++k) {
    const std::size_t j = static_cast<std::size_t>(k) + rng.index(order.size() - static_cast<std::size_t>(k));
    std::swap(order[static_cast<std::size_t>(k)], order[j]);
  }

  std::string prompt = tmpl.text;
  KnowledgeProvenance prov{{}, template_id};
  InstructionTask task;
  std::string appendix;
  for (int k = 0; k < 5; ++k) {
    const std::string placeholder = "{{point_" + std::to_string(k + 1) + "}}";
    if (k < n_points) {
      const KnowledgePoint& p = *matches[order[static_cast<std::size_t>(k)]];
      prov.points.push_back(p.id);
      task.context_docs.push_back(p.content);
      for (const auto& t : p.tags) add_tag(task.tags, t);
      if (prompt.find(placeholder) == std::string::npos) {
        appendix += "\n[" + std::to_string(k + 1) + "] " + p.content;
      } else {
        replace_all(prompt, placeholder, p.content);
      }
    } else {
      replace_all(prompt, placeholder, "");
    }
  }
  replace_all(prompt, "{{values}}", "");
  const bool has_question = prompt.find("{{question}}") != std::string::npos;
  replace_all(prompt, "{{question}}", tmpl.question);
  prompt += appendix;
  if (!has_question && !tmpl.question.empty()) prompt += "\n" + tmpl.question;

  task.task_type = task_type;
  task.domain = matches[order[0]]->domain;
  task.prompt = std::move(prompt);
  task.provenance = std::move(prov);
  task.level = VerificationLevel::unverified;
  task.expected_themes = tmpl.themes;
  for (const auto& t : tmpl.tags) add_tag(task.tags, t);
  return task;
}

namespace {

constexpr std::string_view kDistractorLabels[] = {
    "Operating revenue", "Number of employees", "Dividends paid last year",
    "Marketing expenses", "Number of branches", "Average share price last quarter",
};

std::string format_plain(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string insert_before_question(const std::string& prompt, const std::string& line) {
  const auto pos = prompt.rfind("\nQuestion:");
  if (pos != std::string::npos) {
    std::string out = prompt;
    out.insert(pos, "\n" + line);
    return out;
  }
  return "Additional information: " + line + "\n" + prompt;
}

}  // namespace

InstructionTask TaskGenerator::evolve(const InstructionTask& parent,
                                      const EvolutionStrategy& strategy, std::uint64_t seed,
                                      AxiomRegistry* extendable) const {
  if (parent.id.empty()) {
    throw Error(ErrorCode::precondition, "evolution requires a stored parent task");
  }
  Rng rng(seed);
  const auto param = [&](const std::string& key) -> std::optional<std::string> {
    auto it = strategy.params.find(key);
    return it == strategy.params.end() ? std::nullopt : std::optional(it->second);
  };

  InstructionTask child = parent;
  child.id = TaskId{};

  switch (strategy.kind) {
    case EvolutionKind::add_distractor: {
      const std::string label =
          param("label").value_or(std::string(kDistractorLabels[rng.index(std::size(kDistractorLabels))]));
      const std::string value =
          param("value").value_or(format_plain(std::round(rng.uniform(100.0, 100000.0) * 100.0) / 100.0));
      child.prompt = insert_before_question(parent.prompt, "- " + label + ": " + value);
      break;
    }
    case EvolutionKind::transform_format: {
      if (!parent.gold) {
        throw Error(ErrorCode::precondition, "transform_format requires a task with a gold answer");
      }
      const std::string to = param("to").value_or(
          parent.format == AnswerFormat::open ? "multiple_choice" : "fill_in");
      if (to == "multiple_choice") {
        if (parent.format == AnswerFormat::multiple_choice) {
          throw Error(ErrorCode::invalid_argument, "task is already multiple choice");
        }
        const auto* numeric = std::get_if<NumericGold>(&parent.gold->payload());
        if (numeric == nullptr) {
          throw Error(ErrorCode::invalid_argument,
                      "multiple-choice conversion needs a numeric gold to build options");
        }
        const bool percent = std::holds_alternative<AxiomProvenance>(parent.provenance) &&
                             parent.prompt.find("in percent") != std::string::npos;
        std::vector<double> values{numeric->value};
        for (double d : {0.1, -0.1, 0.25, -0.25, 0.5}) {
          if (values.size() == 4) break;
          const double v = numeric->value == 0.0 ? d * 10.0 : numeric->value * (1.0 + d);
          values.push_back(v);
        }
        const std::size_t correct = rng.index(values.size());
        std::swap(values[0], values[correct]);
        child.options.clear();
        std::string block = "\nOptions:";
        for (std::size_t i = 0; i < values.size(); ++i) {
          const std::string text = percent ? format_plain(values[i]) + "%" : format_plain(values[i]);
          child.options.push_back(text);
          block += "\n" + std::string(1, static_cast<char>('A' + i)) + ". " + text;
        }
        child.prompt = parent.prompt + block + "\nAnswer with the letter of the correct option.";
        child.format = AnswerFormat::multiple_choice;
      } else if (to == "fill_in") {
        if (parent.format != AnswerFormat::multiple_choice) {
          throw Error(ErrorCode::invalid_argument, "task is already fill-in");
        }
        if (const auto* text = std::get_if<TextGold>(&parent.gold->payload());
            text != nullptr && text->normalized.size() == 1) {
          throw Error(ErrorCode::invalid_argument,
                      "an option-letter gold has no meaning once the options are removed");
        }
        const auto pos = parent.prompt.rfind("\nOptions:");
        child.prompt = (pos == std::string::npos ? parent.prompt : parent.prompt.substr(0, pos)) +
                       "\nGive the value directly.";
        child.options.clear();
        child.format = AnswerFormat::open;
      } else {
        throw Error(ErrorCode::invalid_argument, "unknown target format '" + to + "'");
      }
      break;
    }
    case EvolutionKind::add_constraint: {
      if (!parent.derivation) {
        throw Error(ErrorCode::precondition, "add_constraint needs an axiom-derived task");
      }
      const FinancialAxiom& base = axioms_.get(parent.derivation->axiom);
      AxiomId target;
      if (auto t = param("target_axiom")) {
        target = AxiomId(*t);
      } else if (base.harder_variant) {
        target = *base.harder_variant;
      } else {
        target = AxiomId(base.id.str() + "@2p");
        if (!axioms_.contains(target)) {
          if (extendable == nullptr) {
            throw Error(ErrorCode::precondition,
                        "no harder variant registered for axiom " + base.id.str());
          }
          extendable->register_axiom(compose_two_period(base));
        }
      }
      const FinancialAxiom& harder = axioms_.get(target);
      const std::string hidden = param("hidden").value_or(harder.relation.lhs);
      InstructionTask fresh = deduction_task(target, hidden, seed);
      child.prompt = std::move(fresh.prompt);
      child.derivation = std::move(fresh.derivation);
      child.gold = std::move(fresh.gold);
      child.level = VerificationLevel::L1;
      child.format = AnswerFormat::open;
      child.options.clear();
      for (const auto& t : fresh.tags) add_tag(child.tags, t);
      break;
    }
  }
  child.provenance = EvolvedProvenance{parent.id, strategy};
  add_tag(child.tags, "evolved:" + std::string(enum_name(strategy.kind)));
  return child;
}

}  // namespace finforge
