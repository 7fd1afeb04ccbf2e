#include "finforge/ruleverify.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>

namespace finforge {

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_word(char c) { return is_digit(c) || is_alpha(c) || c == '_'; }
char lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

bool starts_with_icase(std::string_view text, std::size_t pos, std::string_view word) {
  if (pos + word.size() > text.size()) return false;
  for (std::size_t i = 0; i < word.size(); ++i) {
    if (lower(text[pos + i]) != lower(word[i])) return false;
  }
  return true;
}

bool word_at(std::string_view text, std::size_t pos, std::string_view word, bool icase) {
  const bool hit = icase ? starts_with_icase(text, pos, word)
                         : text.substr(pos, word.size()) == word;
  if (!hit) return false;
  const std::size_t end = pos + word.size();
  return end >= text.size() || !is_word(text[end]);
}

std::size_t snap_back(std::string_view text, std::size_t pos) {
  while (pos > 0 && pos < text.size() &&
         (static_cast<unsigned char>(text[pos]) & 0xC0) == 0x80) {
    --pos;
  }
  return pos;
}

std::string context_window(std::string_view text, Span span) {
  constexpr std::size_t kRadius = 40;
  std::size_t lo = span.begin > kRadius ? span.begin - kRadius : 0;
  std::size_t hi = std::min(text.size(), span.end + kRadius);
  lo = snap_back(text, lo);
  hi = snap_back(text, hi);
  return std::string(text.substr(lo, hi - lo));
}

struct SuffixUnit {
  std::string_view word;
  Unit::Kind kind;
  std::string_view currency;
  bool needs_boundary;
  bool icase;
};

// Longest alternatives first.
constexpr SuffixUnit kSuffixes[] = {
    {"%", Unit::Kind::percent, "", false, false},
    {"\xEF\xBC\x85", Unit::Kind::percent, "", false, false},  // fullwidth percent
    {"percentage points", Unit::Kind::percentage_point, "", true, true},
    {"percentage point", Unit::Kind::percentage_point, "", true, true},
    {"percent", Unit::Kind::percent, "", true, true},
    {"pct", Unit::Kind::percentage_point, "", true, true},
    {"ppt", Unit::Kind::percentage_point, "", true, true},
    {"pp", Unit::Kind::percentage_point, "", true, true},
    {"CNY", Unit::Kind::currency, "CNY", true, false},
    {"RMB", Unit::Kind::currency, "CNY", true, false},
    {"yuan", Unit::Kind::currency, "CNY", true, true},
    {"USD", Unit::Kind::currency, "USD", true, false},
    {"dollars", Unit::Kind::currency, "USD", true, true},
    {"EUR", Unit::Kind::currency, "EUR", true, false},
    {"HKD", Unit::Kind::currency, "HKD", true, false},
    {"GBP", Unit::Kind::currency, "GBP", true, false},
    {"JPY", Unit::Kind::currency, "JPY", true, false},
};

const SuffixUnit* match_suffix(std::string_view text, std::size_t pos) {
  for (const auto& s : kSuffixes) {
    const bool hit = s.needs_boundary ? word_at(text, pos, s.word, s.icase)
                                      : text.substr(pos, s.word.size()) == s.word;
    if (hit) return &s;
  }
  return nullptr;
}

struct PrefixCurrency {
  std::string_view symbol;
  std::string_view code;
};
constexpr PrefixCurrency kPrefixSymbols[] = {
    {"$", "USD"},        {"\xC2\xA5", "CNY"}, {"\xEF\xBF\xA5", "CNY"},
    {"\xE2\x82\xAC", "EUR"}, {"\xC2\xA3", "GBP"},
};
constexpr std::string_view kPrefixCodes[] = {"CNY", "RMB", "USD", "EUR", "HKD", "GBP", "JPY"};

std::string canonical_code(std::string_view code) {
  if (code == "RMB") return "CNY";
  return std::string(code);
}

std::size_t skip_one_space(std::string_view text, std::size_t pos) {
  if (pos < text.size() && text[pos] == ' ') return pos + 1;
  if (text.substr(pos, 2) == "\xC2\xA0") return pos + 2;
  return pos;
}

std::string trim(std::string_view s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

std::string format_fixed(double v) {
  char buf[512];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed);
  if (ec != std::errc()) return std::to_string(v);
  return std::string(buf, ptr);
}

}  // namespace

std::string to_string(const Unit& unit) {
  switch (unit.kind) {
    case Unit::Kind::plain: return "plain";
    case Unit::Kind::percent: return "percent";
    case Unit::Kind::percentage_point: return "percentage_point";
    case Unit::Kind::currency: return "currency:" + unit.currency;
  }
  return "plain";
}

Unit parse_unit(std::string_view text) {
  if (text == "plain") return Unit::plain();
  if (text == "percent") return Unit::percent();
  if (text == "percentage_point" || text == "pp" || text == "pct") {
    return Unit::percentage_point();
  }
  if (text.starts_with("currency:") && text.size() > 9) {
    return Unit::money(canonical_code(text.substr(9)));
  }
  throw Error(ErrorCode::invalid_argument, "unknown unit '" + std::string(text) + "'");
}

ThinkSplit extract_think(std::string_view text) {
  constexpr std::string_view kOpen = "<think>";
  constexpr std::string_view kClose = "</think>";
  const auto open = text.find(kOpen);
  const auto close = text.find(kClose);
  if (open == std::string_view::npos && close == std::string_view::npos) {
    return {std::nullopt, std::string(text)};
  }
  if (open != 0) {
    throw Error(ErrorCode::malformed, "malformed output: think block must open the output");
  }
  const auto end = text.find(kClose, kOpen.size());
  if (end == std::string_view::npos) {
    throw Error(ErrorCode::malformed, "malformed output: unterminated <think> block");
  }
  const auto body = text.substr(end + kClose.size());
  if (body.find(kOpen) != std::string_view::npos || body.find(kClose) != std::string_view::npos) {
    throw Error(ErrorCode::malformed, "malformed output: stray think tag after the think block");
  }
  return {std::string(text.substr(kOpen.size(), end - kOpen.size())), std::string(body)};
}

std::vector<NumericMention> extract_numbers(std::string_view text) {
  std::vector<NumericMention> out;
  const std::size_t n = text.size();
  std::size_t i = 0;
  while (i < n) {
    if (!is_digit(text[i])) {
      ++i;
      continue;
    }
    // Digits glued to a word ("Q1", "H2O") are not figures.
    if (i > 0 && is_word(text[i - 1])) {
      while (i < n && is_word(text[i])) ++i;
      continue;
    }

    std::string digits;
    std::size_t j = i;
    while (j < n && is_digit(text[j])) digits += text[j++];
    if (j - i <= 3) {
      while (j + 3 < n && text[j] == ',' && is_digit(text[j + 1]) && is_digit(text[j + 2]) &&
             is_digit(text[j + 3]) && (j + 4 >= n || !is_digit(text[j + 4]))) {
        digits.append(text.substr(j + 1, 3));
        j += 4;
      }
    }
    if (j + 1 < n && text[j] == '.' && is_digit(text[j + 1])) {
      digits += '.';
      ++j;
      while (j < n && is_digit(text[j])) digits += text[j++];
    }
    const std::size_t number_end = j;

    const std::size_t after = skip_one_space(text, number_end);
    const SuffixUnit* suffix = match_suffix(text, after);

    // Dotted or glued tails ("1.2.3", "5G", "1st") are unparseable: skip.
    if ((j + 1 < n && text[j] == '.' && is_digit(text[j + 1])) ||
        (j < n && is_alpha(text[j]) && (suffix == nullptr || after != number_end))) {
      while (j < n && (is_word(text[j]) || text[j] == '.')) ++j;
      i = j;
      continue;
    }

    double value = 0.0;
    {
      auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
      if (ec != std::errc() || ptr != digits.data() + digits.size()) {
        i = number_end;
        continue;
      }
    }

    std::size_t begin = i;
    bool negative = false;
    auto take_sign = [&](std::size_t pos) {
      if (pos > 0 && (text[pos - 1] == '-' || text[pos - 1] == '+') &&
          (pos < 2 || !is_word(text[pos - 2]))) {
        negative = text[pos - 1] == '-';
        return pos - 1;
      }
      if (pos >= 3 && text.substr(pos - 3, 3) == "\xE2\x88\x92" &&
          (pos < 4 || !is_word(text[pos - 4]))) {
        negative = true;
        return pos - 3;
      }
      return pos;
    };
    begin = take_sign(begin);

    Unit unit;
    if (begin == i) {
      // Currency prefix, optionally preceded by a sign ("-$5", "CNY 12").
      for (const auto& p : kPrefixSymbols) {
        if (i >= p.symbol.size() && text.substr(i - p.symbol.size(), p.symbol.size()) == p.symbol) {
          unit = Unit::money(std::string(p.code));
          begin = take_sign(i - p.symbol.size());
          break;
        }
      }
      if (unit.kind == Unit::Kind::plain) {
        std::size_t pos = i;
        if (pos > 0 && text[pos - 1] == ' ') --pos;
        for (std::string_view code : kPrefixCodes) {
          if (pos >= code.size() && text.substr(pos - code.size(), code.size()) == code &&
              (pos == code.size() || !is_word(text[pos - code.size() - 1]))) {
            unit = Unit::money(canonical_code(code));
            begin = take_sign(pos - code.size());
            break;
          }
        }
      }
    }

    std::size_t end = number_end;
    if (suffix != nullptr) {
      if (suffix->kind == Unit::Kind::currency) {
        unit = Unit::money(std::string(suffix->currency));
        end = after + suffix->word.size();
      } else if (unit.kind != Unit::Kind::currency) {
        unit = Unit{suffix->kind, {}};
        end = after + suffix->word.size();
      }
    }

    NumericMention m;
    m.value = negative ? -value : value;
    m.unit = unit;
    m.span = {begin, end};
    m.literal = std::string(text.substr(begin, end - begin));
    m.context = context_window(text, m.span);
    out.push_back(std::move(m));
    i = end;
  }
  return out;
}

std::string render_mention(const NumericMention& mention) {
  std::string s = format_fixed(mention.value);
  switch (mention.unit.kind) {
    case Unit::Kind::plain: return s;
    case Unit::Kind::percent: return s + "%";
    case Unit::Kind::percentage_point: return s + " pp";
    case Unit::Kind::currency: return s + " " + mention.unit.currency;
  }
  return s;
}

void GroundTruthFactSet::add(Fact fact) {
  for (const auto& f : facts_) {
    if (f.metric == fact.metric && f.period == fact.period) {
      throw Error(ErrorCode::conflict, "duplicate fact '" + fact.metric + "' for period '" +
                                           fact.period.value_or("") + "'");
    }
  }
  facts_.push_back(std::move(fact));
}

GroundTruthFactSet GroundTruthFactSet::without(std::size_t index) const {
  GroundTruthFactSet copy = *this;
  if (index < copy.facts_.size()) copy.facts_.erase(copy.facts_.begin() + static_cast<long>(index));
  return copy;
}

Tolerance default_tolerance(Unit::Kind kind) {
  if (kind == Unit::Kind::percent || kind == Unit::Kind::percentage_point) return {0.01, 1e-4};
  return {0.0, 1e-4};
}

double fact_accuracy(std::span<const NumericMention> claims, const GroundTruthFactSet& gt,
                     Tolerance tol) {
  if (claims.empty()) return 1.0;
  std::vector<const NumericMention*> ordered;
  ordered.reserve(claims.size());
  for (const auto& c : claims) ordered.push_back(&c);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](auto* a, auto* b) { return a->span.begin < b->span.begin; });

  const auto& facts = gt.facts();
  std::vector<bool> used(facts.size(), false);
  std::size_t matched = 0;
  for (const auto* claim : ordered) {
    std::size_t best = facts.size();
    double best_delta = std::numeric_limits<double>::infinity();
    for (std::size_t f = 0; f < facts.size(); ++f) {
      if (used[f] || !(facts[f].unit == claim->unit)) continue;
      const double delta = std::fabs(claim->value - facts[f].value);
      const double allowed = std::max(tol.abs, tol.rel * std::fabs(facts[f].value));
      if (delta <= allowed && delta < best_delta) {
        best = f;
        best_delta = delta;
      }
    }
    if (best < facts.size()) {
      used[best] = true;
      ++matched;
    }
  }
  return static_cast<double>(matched) / static_cast<double>(claims.size());
}

FormatRule compile_rule(const nlohmann::json& record) {
  auto str = [&](const nlohmann::json& obj, const char* key) -> std::string {
    if (!obj.contains(key) || !obj.at(key).is_string()) {
      throw Error(ErrorCode::malformed, std::string("format rule missing string field '") + key + "'",
                  record.dump());
    }
    return obj.at(key).get<std::string>();
  };
  FormatRule rule;
  rule.id = str(record, "id");
  rule.description = record.value("description", "");
  rule.severity = parse_enum<Severity>(record.value("severity", "error"));
  rule.spec = record;
  if (!record.contains("detector") || !record.at("detector").is_object()) {
    throw Error(ErrorCode::malformed, "format rule '" + rule.id + "' has no detector");
  }
  const auto& d = record.at("detector");
  const std::string kind = str(d, "kind");
  auto flags = std::regex::ECMAScript;
  if (d.value("icase", false)) flags |= std::regex::icase;
  try {
    if (kind == "site_pattern" || kind == "forbid") {
      SitePatternDetector det;
      det.site_source = str(d, kind == "forbid" ? "pattern" : "site");
      det.site = std::regex(det.site_source, flags);
      if (kind == "site_pattern" && d.contains("violation")) {
        det.violation_source = str(d, "violation");
        det.violation = std::regex(det.violation_source, flags);
      }
      rule.detector = std::move(det);
    } else if (kind == "require") {
      RequireDetector det;
      det.pattern_source = str(d, "pattern");
      det.pattern = std::regex(det.pattern_source, flags);
      rule.detector = std::move(det);
    } else if (kind == "json_only") {
      JsonOnlyDetector det;
      if (d.contains("required_keys")) {
        det.required_keys = d.at("required_keys").get<std::vector<std::string>>();
      }
      if (d.contains("allowed_values")) {
        for (const auto& [key, values] : d.at("allowed_values").items()) {
          auto list = values.get<std::vector<std::string>>();
          det.allowed_values[key] = {list.begin(), list.end()};
        }
      }
      rule.detector = std::move(det);
    } else {
      throw Error(ErrorCode::malformed, "unknown detector kind '" + kind + "' in rule " + rule.id);
    }
  } catch (const std::regex_error& e) {
    throw Error(ErrorCode::malformed, "format rule '" + rule.id + "' pattern does not compile",
                e.what());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::malformed, "format rule '" + rule.id + "' detector is malformed",
                e.what());
  }
  return rule;
}

namespace {

struct RuleOutcome {
  std::size_t sites = 0;
  std::vector<FormatViolation> violations;
};

RuleOutcome check_site_pattern(std::string_view text, const FormatRule& rule,
                               const SitePatternDetector& det) {
  RuleOutcome out;
  const char* base = text.data();
  for (std::cregex_iterator it(base, base + text.size(), det.site), end; it != end; ++it) {
    const auto& m = *it;
    if (m.length(0) == 0) continue;
    ++out.sites;
    const std::size_t site_begin = static_cast<std::size_t>(m.position(0));
    const std::size_t site_end = site_begin + static_cast<std::size_t>(m.length(0));
    if (!det.violation) {
      out.violations.push_back({rule.id, {site_begin, site_end}, rule.severity, rule.description});
      continue;
    }
    for (std::cregex_iterator vt(base + site_begin, base + site_end, *det.violation), vend;
         vt != vend; ++vt) {
      if (vt->length(0) == 0) continue;
      const std::size_t vb = site_begin + static_cast<std::size_t>(vt->position(0));
      out.violations.push_back(
          {rule.id, {vb, vb + static_cast<std::size_t>(vt->length(0))}, rule.severity,
           rule.description});
    }
  }
  return out;
}

Span find_quoted(std::string_view text, const std::string& value) {
  const std::string quoted = nlohmann::json(value).dump();
  const auto pos = text.find(quoted);
  if (pos == std::string_view::npos) return {0, text.size()};
  return {pos, pos + quoted.size()};
}

RuleOutcome check_json_only(std::string_view text, const FormatRule& rule,
                            const JsonOnlyDetector& det) {
  RuleOutcome out;
  out.sites = 1;
  std::size_t a = 0;
  std::size_t b = text.size();
  while (a < b && std::isspace(static_cast<unsigned char>(text[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(text[b - 1]))) --b;
  auto violation = [&](Span span, std::string note) {
    out.violations.push_back({rule.id, span, rule.severity, std::move(note)});
  };

  const auto whole = nlohmann::json::parse(text.substr(a, b - a), nullptr, false);
  if (whole.is_discarded()) {
    const auto first = text.find_first_of("{[", a);
    const auto last = text.find_last_of("}]");
    if (first != std::string_view::npos && last != std::string_view::npos && last > first &&
        !nlohmann::json::parse(text.substr(first, last + 1 - first), nullptr, false)
             .is_discarded()) {
      if (first > a) violation({a, first}, "text outside the JSON value");
      if (last + 1 < b) violation({last + 1, b}, "text outside the JSON value");
    } else {
      violation({a, b}, "output is not valid JSON");
    }
    return out;
  }
  if (!whole.is_object() && !whole.is_array()) {
    violation({a, b}, "top-level JSON value must be an object or array");
    return out;
  }
  for (const auto& key : det.required_keys) {
    ++out.sites;
    if (!whole.is_object() || !whole.contains(key)) {
      violation({a, b}, "missing required key '" + key + "'");
    }
  }
  if (whole.is_object()) {
    for (const auto& [key, allowed] : det.allowed_values) {
      if (!whole.contains(key)) continue;
      const auto& v = whole.at(key);
      std::vector<nlohmann::json> items;
      if (v.is_array()) {
        items.assign(v.begin(), v.end());
      } else {
        items.push_back(v);
      }
      for (const auto& item : items) {
        ++out.sites;
        if (!item.is_string()) {
          violation({a, b}, "non-string value under '" + key + "'");
        } else if (!allowed.contains(item.get<std::string>())) {
          violation(find_quoted(text, item.get<std::string>()),
                    "value '" + item.get<std::string>() + "' not allowed under '" + key + "'");
        }
      }
    }
  }
  return out;
}

}  // namespace

FormatResult format_check(std::string_view text, std::span<const FormatRule> rules) {
  FormatResult result;
  std::size_t error_violations = 0;
  for (const auto& rule : rules) {
    RuleOutcome outcome = std::visit(
        [&](const auto& det) -> RuleOutcome {
          using T = std::decay_t<decltype(det)>;
          if constexpr (std::is_same_v<T, SitePatternDetector>) {
            return check_site_pattern(text, rule, det);
          } else if constexpr (std::is_same_v<T, RequireDetector>) {
            RuleOutcome o;
            o.sites = 1;
            if (!std::regex_search(text.begin(), text.end(), det.pattern)) {
              o.violations.push_back({rule.id, {0, text.size()}, rule.severity,
                                      "required pattern absent: " + rule.description});
            }
            return o;
          } else {
            return check_json_only(text, rule, det);
          }
        },
        rule.detector);
    if (rule.severity == Severity::error) {
      result.error_sites += outcome.sites;
      error_violations += outcome.violations.size();
    }
    for (auto& v : outcome.violations) result.violations.push_back(std::move(v));
  }
  std::stable_sort(result.violations.begin(), result.violations.end(),
                   [](const auto& x, const auto& y) { return x.span.begin < y.span.begin; });
  if (result.error_sites > 0) {
    const double ratio =
        static_cast<double>(error_violations) / static_cast<double>(result.error_sites);
    result.score = std::clamp(1.0 - ratio, 0.0, 1.0);
  }
  return result;
}

std::optional<std::string> unbox(std::string_view text) {
  constexpr std::string_view kBoxed = "\\boxed{";
  const auto pos = text.rfind(kBoxed);
  if (pos == std::string_view::npos) return std::nullopt;
  int depth = 1;
  for (std::size_t i = pos + kBoxed.size(); i < text.size(); ++i) {
    if (text[i] == '{') ++depth;
    if (text[i] == '}' && --depth == 0) {
      return std::string(text.substr(pos + kBoxed.size(), i - pos - kBoxed.size()));
    }
  }
  return std::nullopt;
}

std::string normalize_text_answer(std::string_view answer) {
  std::string s = unbox(answer).value_or(std::string(answer));

  static const std::regex kLatexText(R"(\\(?:text|textbf|mathrm|mathbf)\{([^{}]*)\})");
  s = std::regex_replace(s, kLatexText, "$1");

  std::string cleaned;
  cleaned.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '*' || c == '`' || c == '$') continue;
    if (c == '_' && i + 1 < s.size() && s[i + 1] == '_') {
      ++i;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cleaned.empty() && cleaned.back() != ' ') cleaned += ' ';
      continue;
    }
    cleaned += lower(c);
  }
  s = trim(cleaned);

  for (std::string_view prefix : {"final answer:", "the answer is", "answer:", "answer is"}) {
    if (s.starts_with(prefix)) {
      s = trim(s.substr(prefix.size()));
      if (!s.empty() && s.front() == ':') s = trim(s.substr(1));
      break;
    }
  }
  while (!s.empty() && (s.back() == '.' || s.back() == ';')) s.pop_back();
  // "(b)", "b)" and "option b" reduce to the letter.
  if (s.size() == 3 && s.front() == '(' && s.back() == ')') s = s.substr(1, 1);
  if (s.size() == 2 && s.back() == ')' && is_alpha(s.front())) s = s.substr(0, 1);
  for (std::string_view prefix : {"option ", "choice "}) {
    if (s.size() == prefix.size() + 1 && s.starts_with(prefix)) s = s.substr(prefix.size());
  }
  return trim(s);
}

NormalizedAnswer normalize_answer(std::string_view answer) {
  NormalizedAnswer out;
  out.text = normalize_text_answer(answer);
  const auto mentions = extract_numbers(out.text);
  if (mentions.size() == 1) {
    const auto& m = mentions.front();
    const std::string rest = trim(out.text.substr(0, m.span.begin)) +
                             trim(out.text.substr(m.span.end));
    if (rest.empty()) out.number = m.value;
  }
  return out;
}

bool answers_equivalent(const NormalizedAnswer& a, const NormalizedAnswer& b, double rel) {
  if (a.number && b.number) {
    const double x = *a.number;
    const double y = *b.number;
    return std::fabs(x - y) <= rel * std::max(std::fabs(x), std::fabs(y));
  }
  if (a.number || b.number) return false;
  return a.text == b.text;
}

std::optional<double> parse_final_number(std::string_view candidate) {
  const std::string s = unbox(candidate).value_or(std::string(candidate));
  const auto mentions = extract_numbers(s);
  if (mentions.empty()) return std::nullopt;
  return mentions.back().value;
}

bool match_answer(std::string_view candidate, const GoldAnswer& gold,
                  std::optional<Tolerance> tol) {
  return std::visit(
      [&](const auto& payload) -> bool {
        using T = std::decay_t<decltype(payload)>;
        if constexpr (std::is_same_v<T, NumericGold>) {
          const auto value = parse_final_number(candidate);
          if (!value) return false;
          const Tolerance t = tol.value_or(Tolerance{payload.tol_abs, payload.tol_rel});
          const double allowed = std::max(t.abs, t.rel * std::fabs(payload.value));
          return std::fabs(*value - payload.value) <= allowed;
        } else if constexpr (std::is_same_v<T, TextGold>) {
          return normalize_text_answer(candidate) == payload.normalized;
        } else {
          throw Error(ErrorCode::invalid_argument,
                      "gold payload is not matchable by rule (fact_set and rubric golds route "
                      "to fact accuracy and the judge)");
        }
      },
      gold.payload());
}

}  // namespace finforge
