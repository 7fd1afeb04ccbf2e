#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "finforge/domain.hpp"
#include "finforge/expr.hpp"

namespace finforge {

enum class VarUnit { currency, percent, ratio, count };
enum class SignConstraint { any, nonneg, positive };

template <>
struct EnumNames<VarUnit> {
  static constexpr std::string_view kind = "variable unit";
  static constexpr std::array<std::string_view, 4> names{"currency", "percent", "ratio", "count"};
};
template <>
struct EnumNames<SignConstraint> {
  static constexpr std::string_view kind = "sign constraint";
  static constexpr std::array<std::string_view, 3> names{"any", "nonneg", "positive"};
};

struct KnowledgePoint {
  PointId id;
  DomainTag domain = DomainTag::banking;
  std::string content;
  std::string source_ref;
  std::vector<std::string> tags;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return v >= lo && v <= hi; }
  bool operator==(const Interval&) const = default;
};

struct AxiomVariable {
  std::string symbol;
  std::string label;  // display name; defaults to the symbol
  VarUnit unit = VarUnit::currency;
  Interval range;
  SignConstraint sign = SignConstraint::any;
  bool operator==(const AxiomVariable&) const = default;
};

/// A named identity `lhs = expression` over typed variables.
struct FinancialAxiom {
  AxiomId id;
  std::string name;
  std::vector<AxiomVariable> variables;
  expr::Relation relation;
  DomainTag domain = DomainTag::accounting;
  std::optional<AxiomId> harder_variant;
  std::vector<std::string> tags;

  const AxiomVariable& variable(std::string_view symbol) const;
};

/// Throws Error(invalid_argument) on duplicate symbols, undeclared or
/// unused symbols, fewer than two referenced variables, or empty ranges.
void validate_axiom(const FinancialAxiom& axiom);
bool same_definition(const FinancialAxiom& a, const FinancialAxiom& b);

/// Two-period aggregate of an axiom: every right-hand variable is split per
/// period and `<lhs>_total = rhs(period 1) + rhs(period 2)`.
FinancialAxiom compose_two_period(const FinancialAxiom& base);

class AxiomRegistry {
 public:
  /// Idempotent on identical definitions; a different definition under an
  /// existing id is a conflict.
  AxiomId register_axiom(FinancialAxiom definition);
  const FinancialAxiom& get(const AxiomId& id) const;
  bool contains(const AxiomId& id) const;
  std::vector<AxiomId> ids() const;
  std::size_t size() const;

 private:
  mutable std::shared_mutex mu_;
  std::map<AxiomId, FinancialAxiom> axioms_;
};

struct InstructionTemplate {
  TemplateId id;
  TaskType task_type = TaskType::compliance;
  /// Placeholders: {{point_1}}..{{point_5}}, {{values}}, {{question}}.
  std::string text;
  std::string question;
  std::vector<std::string> tags;
  std::vector<std::string> themes;  // expected paragraph themes, if any
};

class TemplateRegistry {
 public:
  void add(InstructionTemplate tmpl);
  const InstructionTemplate& get(const TemplateId& id) const;
  bool contains(const TemplateId& id) const;
  std::size_t size() const { return templates_.size(); }

 private:
  std::map<TemplateId, InstructionTemplate> templates_;
};

struct PointSelector {
  std::optional<DomainTag> domain;
  std::optional<std::string> tag;
  std::optional<std::string> contains;
};

class KnowledgeBase {
 public:
  void add(KnowledgePoint point);
  const KnowledgePoint& get(const PointId& id) const;
  /// Matching points ordered by id.
  std::vector<const KnowledgePoint*> select(const PointSelector& selector) const;
  std::size_t size() const { return points_.size(); }

 private:
  std::map<PointId, KnowledgePoint> points_;
};

/// Value of `hidden` that satisfies the relation given every other variable.
/// Uses symbolic inversion when `hidden` occurs once, otherwise bisection on
/// the declared range (tolerance 1e-10). Returns nullopt when no solution
/// lies in the declared range and sign.
std::optional<double> solve_hidden(const FinancialAxiom& axiom, std::string_view hidden,
                                   const expr::Bindings& visible);

/// |lhs - rhs| / max(1, |lhs|) with every variable bound.
double relation_residual(const FinancialAxiom& axiom, const expr::Bindings& all);

/// Rounding applied to sampled and displayed values of a unit.
double round_for_unit(double value, VarUnit unit);
std::string format_value(double value, VarUnit unit);

struct DeductionRequest {
  AxiomId axiom;
  std::string hidden_symbol;
  std::uint64_t seed = 0;
};

struct ScoredResult {
  const InstructionTask* task = nullptr;
  double reward = 0.0;
};

struct WeaknessCluster {
  std::string tag;
  std::size_t failure_count = 0;
  std::size_t attempts = 0;
  double failure_rate = 0.0;
};

struct WeaknessReport {
  std::vector<WeaknessCluster> clusters;  // non-increasing failure_rate
};

/// Clusters failures (reward below `success_cutoff`) by task type, domain
/// and free-form tags.
WeaknessReport diagnose_weakness(std::span<const ScoredResult> results,
                                 double success_cutoff = 1.0);

/// Pure task generation; ids are left empty for the caller to assign.
class TaskGenerator {
 public:
  static constexpr int kMaxResamples = 16;

  TaskGenerator(const AxiomRegistry& axioms, const KnowledgeBase& kb,
                const TemplateRegistry& templates)
      : axioms_(axioms), kb_(kb), templates_(templates) {}

  InstructionTask deduction_task(const AxiomId& axiom, std::string_view hidden,
                                 std::uint64_t seed) const;
  /// Deduction task for fixed visible values (no sampling).
  InstructionTask deduction_task_from_values(const FinancialAxiom& axiom, std::string_view hidden,
                                             const expr::Bindings& visible) const;

  InstructionTask knowledge_task(const PointSelector& selector, int n_points,
                                 const TemplateId& template_id, TaskType task_type,
                                 std::uint64_t seed) const;

  /// `add_constraint` needs a registry it may extend with a two-period
  /// variant, so it takes the mutable registry explicitly.
  InstructionTask evolve(const InstructionTask& parent, const EvolutionStrategy& strategy,
                         std::uint64_t seed, AxiomRegistry* extendable = nullptr) const;

 private:
  const AxiomRegistry& axioms_;
  const KnowledgeBase& kb_;
  const TemplateRegistry& templates_;
};

}  // namespace finforge
