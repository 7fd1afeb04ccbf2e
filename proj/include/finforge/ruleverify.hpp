#pragma once

#include <map>
#include <optional>
#include <regex>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "finforge/domain.hpp"
#include "json.hpp"

namespace finforge {

struct Unit {
  enum class Kind { plain, percent, percentage_point, currency };
  Kind kind = Kind::plain;
  std::string currency;  // set iff kind == currency

  static Unit plain() { return {}; }
  static Unit percent() { return {Kind::percent, {}}; }
  static Unit percentage_point() { return {Kind::percentage_point, {}}; }
  static Unit money(std::string code) { return {Kind::currency, std::move(code)}; }

  bool operator==(const Unit&) const = default;
};

/// "plain", "percent", "percentage_point", or "currency:CODE".
std::string to_string(const Unit& unit);
Unit parse_unit(std::string_view text);

/// Half-open byte interval [begin, end) into the source text.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool operator==(const Span&) const = default;
};

/// A decimal literal found in text. Percent values are stored as written
/// (11.67 means 11.67%).
struct NumericMention {
  double value = 0.0;
  Unit unit;
  Span span;
  std::string literal;
  std::string context;
};

struct ThinkSplit {
  std::optional<std::string> think;
  std::string body;
};

/// Splits `<think>...</think>` reasoning from the answer body. A tag-bearing
/// output must open with `<think>`; anything else with a stray tag is
/// malformed. No tags at all is non-thinking output.
ThinkSplit extract_think(std::string_view text);

std::vector<NumericMention> extract_numbers(std::string_view text);

/// Canonical text for a mention; extract_numbers of it yields the same
/// (value, unit).
std::string render_mention(const NumericMention& mention);

struct Fact {
  std::string metric;
  double value = 0.0;
  Unit unit;
  std::optional<std::string> period;
};

class GroundTruthFactSet {
 public:
  GroundTruthFactSet() = default;
  explicit GroundTruthFactSet(std::string id) : id_(std::move(id)) {}

  /// Rejects a second fact with the same (metric, period).
  void add(Fact fact);
  GroundTruthFactSet without(std::size_t index) const;

  const std::string& id() const noexcept { return id_; }
  const std::vector<Fact>& facts() const noexcept { return facts_; }

 private:
  std::string id_;
  std::vector<Fact> facts_;
};

struct Tolerance {
  double abs = 0.0;
  double rel = 1e-4;
};

/// Default tolerance for a gold of the given unit: 0.01 pp for percent-like
/// golds, relative 1e-4 otherwise.
Tolerance default_tolerance(Unit::Kind kind);

/// Fraction of claims matched one-to-one against facts of the same unit
/// within max(tol.abs, tol.rel * |fact|). Claims are matched greedily in
/// span order, each taking the closest unused fact. No claims scores 1.
double fact_accuracy(std::span<const NumericMention> claims, const GroundTruthFactSet& gt,
                     Tolerance tol);

enum class Severity { error, warn };
template <>
struct EnumNames<Severity> {
  static constexpr std::string_view kind = "severity";
  static constexpr std::array<std::string_view, 2> names{"error", "warn"};
};

/// Every match of `site` is a site; a violation is a match of `violation`
/// inside a site (or the whole site when `violation` is empty).
struct SitePatternDetector {
  std::string site_source;
  std::string violation_source;
  std::regex site;
  std::optional<std::regex> violation;
};

/// One site; violated when `pattern` never matches.
struct RequireDetector {
  std::string pattern_source;
  std::regex pattern;
};

/// The whole output must be a single JSON value, optionally with required
/// keys and per-key allowed string values.
struct JsonOnlyDetector {
  std::vector<std::string> required_keys;
  std::map<std::string, std::set<std::string>> allowed_values;
};

using Detector = std::variant<SitePatternDetector, RequireDetector, JsonOnlyDetector>;

struct FormatRule {
  std::string id;
  std::string description;
  Detector detector;
  Severity severity = Severity::error;
  nlohmann::json spec;  // the declarative record the rule was compiled from
};

/// Compiles `{id, description, severity, detector: {kind, ...}}`. Kinds:
/// `site_pattern` {site, violation?, icase?}, `forbid` {pattern, icase?},
/// `require` {pattern, icase?}, `json_only` {required_keys?, allowed_values?}.
FormatRule compile_rule(const nlohmann::json& record);

struct FormatViolation {
  std::string rule_id;
  Span span;
  Severity severity = Severity::error;
  std::string note;
};

struct FormatResult {
  std::vector<FormatViolation> violations;
  std::size_t error_sites = 0;
  double score = 1.0;
};

FormatResult format_check(std::string_view text, std::span<const FormatRule> rules);

/// Answer normalization shared by voting and exact-text matching: unboxes
/// \boxed{}, strips markup and answer prefixes, collapses whitespace and
/// case-folds.
std::string normalize_text_answer(std::string_view answer);
/// Content of the last \boxed{...}, if any.
std::optional<std::string> unbox(std::string_view text);

struct NormalizedAnswer {
  std::optional<double> number;
  std::string text;
};
NormalizedAnswer normalize_answer(std::string_view answer);
/// Numbers compare with relative tolerance; text compares exactly.
bool answers_equivalent(const NormalizedAnswer& a, const NormalizedAnswer& b,
                        double rel = 1e-6);

/// Last numeric value of the (unboxed) final answer.
std::optional<double> parse_final_number(std::string_view candidate);

/// Numeric golds compare the candidate's final number within tolerance (the
/// `tol` argument replaces the gold's own); text golds compare normalized
/// strings. Fact-set and rubric golds throw Error(invalid_argument).
bool match_answer(std::string_view candidate, const GoldAnswer& gold,
                  std::optional<Tolerance> tol = std::nullopt);

struct RuleVerdict {
  std::optional<double> fact_score;
  std::optional<double> format_score;
  std::vector<FormatViolation> format_violations;
  std::optional<bool> answer_match;
  std::string details;
};

}  // namespace finforge
