#include "finforge/judgeverify.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <thread>

#include "httplib.h"

namespace finforge {

void JudgeRequest::validate() const {
  const bool has_themes = expected_themes.has_value();
  if (kind == JudgeKind::structure && (!has_themes || expected_themes->empty())) {
    throw Error(ErrorCode::invalid_argument, "structure judge request needs expected themes");
  }
  if (kind != JudgeKind::structure && has_themes) {
    throw Error(ErrorCode::invalid_argument,
                std::string(enum_name(kind)) + " judge request must not carry themes");
  }
}

JudgeVerdict parse_verdict(const nlohmann::json& body) {
  if (!body.is_object() || !body.contains("score") || !body.at("score").is_number()) {
    throw Error(ErrorCode::malformed, "judge reply is not a structured verdict", body.dump());
  }
  JudgeVerdict v;
  v.score = body.at("score").get<double>();
  if (!(v.score >= 0.0 && v.score <= 1.0)) {
    throw Error(ErrorCode::malformed, "judge score outside [0,1]", body.dump());
  }
  if (body.contains("flags")) {
    if (!body.at("flags").is_array()) {
      throw Error(ErrorCode::malformed, "judge flags must be an array", body.dump());
    }
    for (const auto& f : body.at("flags")) {
      if (!f.is_object() || !f.contains("kind") || !f.at("kind").is_string()) {
        throw Error(ErrorCode::malformed, "judge flag without kind", body.dump());
      }
      JudgeFlag flag;
      flag.kind = f.at("kind").get<std::string>();
      flag.note = f.value("note", "");
      if (f.contains("span") && f.at("span").is_array() && f.at("span").size() == 2) {
        flag.span = Span{f.at("span")[0].get<std::size_t>(), f.at("span")[1].get<std::size_t>()};
      }
      v.flags.push_back(std::move(flag));
    }
  }
  v.raw = body.contains("raw") && body.at("raw").is_string() ? body.at("raw").get<std::string>()
                                                              : body.dump();
  return v;
}

nlohmann::json verdict_to_json(const JudgeVerdict& verdict) {
  nlohmann::json flags = nlohmann::json::array();
  for (const auto& f : verdict.flags) {
    nlohmann::json j{{"kind", f.kind}, {"note", f.note}};
    if (f.span) j["span"] = {f.span->begin, f.span->end};
    flags.push_back(std::move(j));
  }
  return {{"score", verdict.score}, {"flags", flags}, {"raw", verdict.raw}};
}

nlohmann::json request_to_json(const JudgeRequest& request) {
  nlohmann::json j{{"kind", enum_name(request.kind)},
                   {"source", request.source},
                   {"output", request.output},
                   {"request_id", request.request_id}};
  if (request.expected_themes) j["themes"] = *request.expected_themes;
  return j;
}

JudgeRequest request_from_json(const nlohmann::json& body) {
  JudgeRequest r;
  r.kind = parse_enum<JudgeKind>(body.at("kind").get<std::string>());
  r.source = body.value("source", "");
  r.output = body.value("output", "");
  r.request_id = body.value("request_id", "");
  if (body.contains("themes")) r.expected_themes = body.at("themes").get<std::vector<std::string>>();
  r.validate();
  return r;
}

namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

struct Sentence {
  Span span;
  std::string_view text;
};

std::vector<Sentence> split_sentences(std::string_view text) {
  std::vector<Sentence> out;
  std::size_t start = 0;
  auto flush = [&](std::size_t end) {
    std::size_t a = start;
    std::size_t b = end;
    while (a < b && std::isspace(static_cast<unsigned char>(text[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(text[b - 1]))) --b;
    if (b > a) out.push_back({{a, b}, text.substr(a, b - a)});
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    const bool end_punct = (c == '.' || c == '!' || c == '?') &&
                           (i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1])));
    if (c == '\n' || end_punct) {
      flush(end_punct ? i + 1 : i);
      start = i + 1;
    } else if (text.substr(i, 3) == "\xE3\x80\x82") {  // ideographic full stop
      flush(i + 3);
      start = i + 3;
      i += 2;
    }
  }
  flush(text.size());
  return out;
}

const std::set<std::string>& stopwords() {
  static const std::set<std::string> words{
      "the", "and", "of",  "to",   "a",    "in",   "for",  "is",   "are",  "was", "were",
      "by",  "with", "on", "as",   "at",   "from", "that", "this", "it",   "its", "be",
      "has", "have", "had", "an",  "or",   "which", "than", "but", "not",  "we",  "our"};
  return words;
}

std::set<std::string> content_tokens(std::string_view text) {
  std::set<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (cur.size() >= 2 && !std::all_of(cur.begin(), cur.end(), ::isdigit) &&
        !stopwords().contains(cur)) {
      out.insert(cur);
    }
    cur.clear();
  };
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

bool same_number(const NumericMention& a, const NumericMention& b) {
  return a.unit == b.unit &&
         std::fabs(a.value - b.value) <= 1e-9 * std::max({1.0, std::fabs(a.value), std::fabs(b.value)});
}

JudgeVerdict mock_consistency(const JudgeRequest& req) {
  const auto source_sentences = split_sentences(req.source);
  const auto source_mentions = extract_numbers(req.source);
  struct SourceInfo {
    std::vector<NumericMention> mentions;
    std::set<std::string> tokens;
  };
  std::vector<SourceInfo> sources;
  for (const auto& s : source_sentences) {
    sources.push_back({extract_numbers(s.text), content_tokens(s.text)});
  }

  JudgeVerdict v;
  std::size_t claims = 0;
  std::size_t supported = 0;
  for (const auto& claim : split_sentences(req.output)) {
    const auto mentions = extract_numbers(claim.text);
    const auto tokens = content_tokens(claim.text);
    if (mentions.empty() && tokens.empty()) continue;
    ++claims;
    bool ok = false;
    for (const auto& src : sources) {
      const bool numbers_ok = std::all_of(mentions.begin(), mentions.end(), [&](const auto& m) {
        return std::any_of(src.mentions.begin(), src.mentions.end(),
                           [&](const auto& s) { return same_number(m, s); });
      });
      if (!numbers_ok) continue;
      std::size_t shared = 0;
      for (const auto& t : tokens) shared += src.tokens.contains(t) ? 1 : 0;
      if (static_cast<double>(shared) >= 0.6 * static_cast<double>(tokens.size())) {
        ok = true;
        break;
      }
    }
    if (ok) {
      ++supported;
      continue;
    }
    const bool novel_number = std::any_of(mentions.begin(), mentions.end(), [&](const auto& m) {
      return std::none_of(source_mentions.begin(), source_mentions.end(),
                          [&](const auto& s) { return same_number(m, s); });
    });
    v.flags.push_back({novel_number ? "hallucination" : "unsupported", claim.span,
                       std::string(claim.text)});
  }
  v.score = claims == 0 ? 1.0 : static_cast<double>(supported) / static_cast<double>(claims);
  v.raw = "mock consistency: " + std::to_string(supported) + "/" + std::to_string(claims) +
          " claims supported";
  return v;
}

const std::map<std::string, std::vector<std::string>>& theme_lexicon() {
  static const std::map<std::string, std::vector<std::string>> lex{
      {"profitability", {"profit", "profitability", "margin", "earnings", "net income", "roe"}},
      {"future outlook", {"outlook", "future", "expect", "forecast", "guidance", "going forward"}},
      {"growth", {"growth", "grew", "increase", "yoy", "year-over-year"}},
      {"risk", {"risk", "uncertainty", "exposure", "volatility"}},
      {"liquidity", {"liquidity", "cash flow", "current ratio", "working capital"}},
      {"valuation", {"valuation", "undervalued", "overvalued", "multiple", "p/e"}},
      {"revenue", {"revenue", "sales", "top line"}},
  };
  return lex;
}

bool contains_term(const std::string& haystack, const std::string& term) {
  std::size_t pos = 0;
  while ((pos = haystack.find(term, pos)) != std::string::npos) {
    const bool left = pos == 0 || !std::isalnum(static_cast<unsigned char>(haystack[pos - 1]));
    // Prefix match on the right so "expect" covers "expected".
    if (left) return true;
    ++pos;
  }
  return false;
}

std::vector<std::string> split_paragraphs(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in{std::string(text)};
  std::string line;
  auto flush = [&] {
    if (cur.find_first_not_of(" \t\r\n") != std::string::npos) out.push_back(cur);
    cur.clear();
  };
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      flush();
    } else {
      cur += line;
      cur += '\n';
    }
  }
  flush();
  return out;
}

JudgeVerdict mock_structure(const JudgeRequest& req) {
  JudgeVerdict v;
  const auto paragraphs = split_paragraphs(req.output);
  const auto& themes = *req.expected_themes;
  std::size_t covered = 0;
  for (const auto& theme : themes) {
    const std::string key = lowercase(theme);
    std::vector<std::string> terms{key};
    if (auto it = theme_lexicon().find(key); it != theme_lexicon().end()) {
      terms.insert(terms.end(), it->second.begin(), it->second.end());
    }
    const bool hit = std::any_of(paragraphs.begin(), paragraphs.end(), [&](const auto& p) {
      const std::string lp = lowercase(p);
      return std::any_of(terms.begin(), terms.end(),
                         [&](const auto& t) { return contains_term(lp, t); });
    });
    if (hit) {
      ++covered;
    } else {
      v.flags.push_back({"missing_theme", std::nullopt, theme});
    }
  }
  v.score = paragraphs.empty() ? 0.0
                               : static_cast<double>(covered) / static_cast<double>(themes.size());
  v.raw = "mock structure: " + std::to_string(covered) + "/" + std::to_string(themes.size()) +
          " themes over " + std::to_string(paragraphs.size()) + " paragraphs";
  return v;
}

JudgeVerdict mock_style(const JudgeRequest& req) {
  static const std::set<std::string> filler{
      "very",   "really",     "basically", "actually", "just",      "quite",
      "literally", "extremely", "obviously", "simply", "totally",   "definitely",
      "certainly", "honestly",  "essentially", "somewhat", "rather", "pretty"};
  JudgeVerdict v;
  std::size_t words = 0;
  std::size_t fillers = 0;
  std::size_t long_sentences = 0;
  for (const auto& s : split_sentences(req.output)) {
    std::istringstream in{std::string(s.text)};
    std::string w;
    std::size_t sentence_words = 0;
    while (in >> w) {
      std::string core;
      for (char c : w) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
          core += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
      }
      ++sentence_words;
      if (filler.contains(core)) ++fillers;
    }
    words += sentence_words;
    if (sentence_words > 35) {
      ++long_sentences;
      v.flags.push_back({"long_sentence", s.span, std::to_string(sentence_words) + " words"});
    }
  }
  if (words == 0) {
    v.score = 0.0;
    v.raw = "mock style: empty output";
    return v;
  }
  const double filler_fraction = static_cast<double>(fillers) / static_cast<double>(words);
  v.score = std::clamp(1.0 - 2.0 * filler_fraction - 0.1 * static_cast<double>(long_sentences),
                       0.0, 1.0);
  if (fillers > 0) v.flags.push_back({"filler", std::nullopt, std::to_string(fillers) + " filler words"});
  v.raw = "mock style: filler " + std::to_string(fillers) + "/" + std::to_string(words) +
          ", long sentences " + std::to_string(long_sentences);
  return v;
}

JudgeVerdict mock_reasoning(const JudgeRequest& req) {
  const auto a = extract_numbers(req.source);
  const auto b = extract_numbers(req.output);
  auto unique_values = [](const std::vector<NumericMention>& ms) {
    std::vector<double> out;
    for (const auto& m : ms) {
      const bool seen = std::any_of(out.begin(), out.end(), [&](double v) {
        return std::fabs(v - m.value) <= 1e-6 * std::max(std::fabs(v), std::fabs(m.value));
      });
      if (!seen) out.push_back(m.value);
    }
    return out;
  };
  const auto va = unique_values(a);
  const auto vb = unique_values(b);
  JudgeVerdict v;
  if (va.empty() && vb.empty()) {
    v.score = 1.0;
  } else {
    std::size_t inter = 0;
    for (double x : va) {
      inter += std::any_of(vb.begin(), vb.end(), [&](double y) {
                 return std::fabs(x - y) <= 1e-6 * std::max(std::fabs(x), std::fabs(y));
               })
                   ? 1
                   : 0;
    }
    const std::size_t uni = va.size() + vb.size() - inter;
    v.score = static_cast<double>(inter) / static_cast<double>(uni);
  }
  if (v.score < 0.5) v.flags.push_back({"contradiction", std::nullopt, "reasoning chains diverge"});
  v.raw = "mock reasoning overlap " + std::to_string(v.score);
  return v;
}

}  // namespace

JudgeVerdict MockJudge::evaluate(const JudgeRequest& request) {
  request.validate();
  switch (request.kind) {
    case JudgeKind::consistency: return mock_consistency(request);
    case JudgeKind::structure: return mock_structure(request);
    case JudgeKind::style: return mock_style(request);
    case JudgeKind::reasoning_consistency: return mock_reasoning(request);
  }
  throw Error(ErrorCode::internal, "unhandled judge kind");
}

JudgeVerdict CountingJudge::evaluate(const JudgeRequest& request) {
  ++calls_;
  return inner_.evaluate(request);
}

HttpJudgeClient::HttpJudgeClient(HttpJudgeOptions options) : options_(std::move(options)) {
  const auto scheme = options_.endpoint.find("://");
  const auto path_pos =
      options_.endpoint.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (scheme == std::string::npos || path_pos == std::string::npos) {
    throw Error(ErrorCode::invalid_argument,
                "judge endpoint must look like http://host:port/path: " + options_.endpoint);
  }
  host_ = options_.endpoint.substr(0, path_pos);
  path_ = options_.endpoint.substr(path_pos);
  if (options_.max_in_flight == 0) options_.max_in_flight = 1;
}

JudgeVerdict HttpJudgeClient::evaluate(const JudgeRequest& request) {
  request.validate();
  JudgeRequest req = request;
  if (req.request_id.empty()) req.request_id = "judge-" + std::to_string(next_id_++);
  const std::string body = request_to_json(req).dump();

  {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return in_flight_ < options_.max_in_flight; });
    ++in_flight_;
  }
  struct Release {
    HttpJudgeClient& self;
    ~Release() {
      {
        std::lock_guard lock(self.mu_);
        --self.in_flight_;
      }
      self.cv_.notify_one();
    }
  } release{*this};

  httplib::Client client(host_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());

  std::string last_error;
  bool timed_out = false;
  for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(options_.backoff * (1 << (attempt - 1)));
    auto res = client.Post(path_, body, "application/json");
    if (!res) {
      timed_out = res.error() == httplib::Error::Read || res.error() == httplib::Error::Write;
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "judge returned HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw Error(ErrorCode::malformed,
                  "judge rejected request with HTTP " + std::to_string(res->status), res->body);
    }
    const auto parsed = nlohmann::json::parse(res->body, nullptr, false);
    if (parsed.is_discarded()) {
      throw Error(ErrorCode::malformed, "judge reply is not JSON", res->body);
    }
    return parse_verdict(parsed);
  }
  throw Error(timed_out ? ErrorCode::timeout : ErrorCode::unavailable,
              "judge unreachable at " + options_.endpoint, last_error);
}

JudgeVerdict judge_consistency(const std::string& source, const std::string& output,
                               JudgeClient& client) {
  return client.evaluate({JudgeKind::consistency, source, output, std::nullopt, {}});
}

JudgeVerdict judge_structure(const std::string& output,
                             const std::vector<std::string>& expected_themes,
                             JudgeClient& client) {
  return client.evaluate({JudgeKind::structure, {}, output, expected_themes, {}});
}

JudgeVerdict judge_style(const std::string& output, JudgeClient& client) {
  return client.evaluate({JudgeKind::style, {}, output, std::nullopt, {}});
}

VerifierRouting VerifierRouting::defaults() {
  VerifierRouting r;
  r.set(TaskType::calculation, {1.0, 0.0, {}});
  r.set(TaskType::table_reasoning, {1.0, 0.0, {}});
  r.set(TaskType::intent, {0.0, 1.0, {JudgeKind::consistency}});
  r.set(TaskType::hallucination_detection, {0.0, 1.0, {JudgeKind::consistency}});
  r.set(TaskType::commenting,
        {0.5, 0.5, {JudgeKind::consistency, JudgeKind::structure, JudgeKind::style}});
  r.set(TaskType::compliance, {0.5, 0.5, {JudgeKind::consistency}});
  return r;
}

void VerifierRouting::set(TaskType type, RouteEntry entry) {
  if (entry.rule_weight < 0.0 || entry.judge_weight < 0.0 ||
      std::fabs(entry.rule_weight + entry.judge_weight - 1.0) > 1e-12) {
    throw Error(ErrorCode::invalid_argument, "routing weights for " +
                                                 std::string(enum_name(type)) +
                                                 " must be non-negative and sum to 1");
  }
  if (entry.judge_weight > 0.0 && entry.judge_kinds.empty()) {
    throw Error(ErrorCode::invalid_argument,
                "route for " + std::string(enum_name(type)) + " weights the judge but names no kinds");
  }
  if (entry.judge_kinds.contains(JudgeKind::reasoning_consistency)) {
    throw Error(ErrorCode::invalid_argument, "reasoning_consistency is a voting check, not a reward");
  }
  routes_[type] = std::move(entry);
}

const RouteEntry& VerifierRouting::at(TaskType type) const {
  auto it = routes_.find(type);
  if (it == routes_.end()) {
    throw Error(ErrorCode::precondition, "no verifier route for task type " +
                                             std::string(enum_name(type)));
  }
  return it->second;
}

RewardWeights RewardWeights::defaults() {
  RewardWeights w;
  const std::map<std::string, double> answer{{"answer_match", 1.0}};
  const std::map<std::string, double> consistency{{"consistency", 1.0}};
  w.set(TaskType::calculation, {answer, {}});
  w.set(TaskType::table_reasoning, {answer, {}});
  w.set(TaskType::intent, {{}, consistency});
  w.set(TaskType::hallucination_detection, {{}, consistency});
  w.set(TaskType::compliance, {answer, consistency});
  w.set(TaskType::commenting, {{{"fact", 0.7}, {"format", 0.3}},
                               {{"consistency", 0.5}, {"structure", 0.3}, {"style", 0.2}}});
  return w;
}

void RewardWeights::set(TaskType type, ComponentWeights weights) {
  for (const auto* side : {&weights.rule, &weights.judge}) {
    if (side->empty()) continue;
    double sum = 0.0;
    for (const auto& [name, w] : *side) {
      if (w < 0.0) throw Error(ErrorCode::invalid_argument, "negative weight for " + name);
      sum += w;
    }
    if (std::fabs(sum - 1.0) > 1e-9) {
      throw Error(ErrorCode::invalid_argument, "component weights for " +
                                                   std::string(enum_name(type)) + " must sum to 1");
    }
  }
  weights_[type] = std::move(weights);
}

const ComponentWeights& RewardWeights::at(TaskType type) const {
  auto it = weights_.find(type);
  if (it == weights_.end()) {
    throw Error(ErrorCode::precondition,
                "no component weights for task type " + std::string(enum_name(type)));
  }
  return it->second;
}

namespace {

double combine(const std::map<std::string, double>& components,
               const std::map<std::string, double>& weights) {
  double sum = 0.0;
  for (const auto& [name, w] : weights) {
    auto it = components.find(name);
    sum += w * (it == components.end() ? 0.0 : it->second);
  }
  return sum;
}

double recombine(const RouteEntry& route, const ComponentWeights& weights,
                 const std::map<std::string, double>& components) {
  double scalar = 0.0;
  if (route.rule_weight > 0.0) scalar += route.rule_weight * combine(components, weights.rule);
  if (route.judge_weight > 0.0) scalar += route.judge_weight * combine(components, weights.judge);
  return std::clamp(scalar, 0.0, 1.0);
}

void check_unit(const std::string& name, double v) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw Error(ErrorCode::invalid_argument, "component '" + name + "' outside [0,1]");
  }
}

}  // namespace

double RewardBreakdown::recompute() const {
  return recombine(routing_used, weights_used, components);
}

RewardBreakdown aggregate_reward(TaskType task_type, const RuleVerdict& rule_verdict,
                                 const std::map<JudgeKind, JudgeVerdict>& judge_verdicts,
                                 const VerifierRouting& routing, const RewardWeights& weights) {
  RewardBreakdown out;
  out.task_type = task_type;
  out.routing_used = routing.at(task_type);
  out.weights_used = weights.at(task_type);
  const auto& route = out.routing_used;
  const auto& cw = out.weights_used;

  if (route.rule_weight > 0.0) {
    for (const auto& [name, w] : cw.rule) {
      std::optional<double> value;
      if (name == "answer_match" && rule_verdict.answer_match) {
        value = *rule_verdict.answer_match ? 1.0 : 0.0;
      } else if (name == "fact") {
        value = rule_verdict.fact_score;
      } else if (name == "format") {
        value = rule_verdict.format_score;
      }
      if (!value) {
        if (w == 0.0) continue;
        throw Error(ErrorCode::precondition,
                    "missing rule component '" + name + "' required by route");
      }
      check_unit(name, *value);
      out.components[name] = *value;
    }
  }
  if (route.judge_weight > 0.0) {
    for (const auto& [name, w] : cw.judge) {
      const JudgeKind kind = parse_enum<JudgeKind>(name);
      auto it = judge_verdicts.find(kind);
      if (it == judge_verdicts.end()) {
        if (w == 0.0) continue;
        throw Error(ErrorCode::precondition,
                    "missing judge component '" + name + "' required by route");
      }
      check_unit(name, it->second.score);
      out.components[name] = it->second.score;
    }
  }
  out.scalar = recombine(route, cw, out.components);
  std::ostringstream audit;
  audit << "route " << enum_name(task_type) << " rule=" << route.rule_weight
        << " judge=" << route.judge_weight;
  if (!rule_verdict.details.empty()) audit << "; " << rule_verdict.details;
  for (const auto& [kind, v] : judge_verdicts) audit << "; " << enum_name(kind) << ": " << v.raw;
  out.audit = audit.str();
  return out;
}

std::string resolve_choice(const InstructionTask& task, std::string_view answer) {
  if (task.format != AnswerFormat::multiple_choice || task.options.empty()) {
    return std::string(answer);
  }
  const std::string norm = normalize_text_answer(answer);
  if (norm.size() == 1 && norm[0] >= 'a' && norm[0] < 'a' + static_cast<int>(task.options.size())) {
    return task.options[static_cast<std::size_t>(norm[0] - 'a')];
  }
  return std::string(answer);
}

RewardBreakdown score_response(const InstructionTask& task, std::string_view response,
                               const ScoringContext& ctx) {
  if (ctx.routing == nullptr || ctx.weights == nullptr) {
    throw Error(ErrorCode::internal, "scoring context lacks routing or weights");
  }
  const RouteEntry& route = ctx.routing->at(task.task_type);
  const ComponentWeights& cw = ctx.weights->at(task.task_type);

  ThinkSplit split;
  try {
    split = extract_think(response);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::malformed) throw;
    RuleVerdict zero;
    zero.answer_match = false;
    zero.fact_score = 0.0;
    zero.format_score = 0.0;
    zero.details = e.what();
    std::map<JudgeKind, JudgeVerdict> judged;
    for (const auto& [name, w] : cw.judge) {
      judged[parse_enum<JudgeKind>(name)] = JudgeVerdict{0.0, {}, "not judged: malformed output"};
    }
    return aggregate_reward(task.task_type, zero, judged, *ctx.routing, *ctx.weights);
  }
  const std::string& body = split.body;

  RuleVerdict rule;
  std::ostringstream details;
  if (route.rule_weight > 0.0) {
    if (cw.rule.contains("answer_match")) {
      if (!task.gold) {
        throw Error(ErrorCode::precondition, "task " + task.id.str() + " has no gold answer");
      }
      rule.answer_match = match_answer(resolve_choice(task, body), *task.gold, ctx.tolerance);
      details << "answer_match=" << *rule.answer_match;
    }
    if (cw.rule.contains("fact")) {
      if (ctx.facts == nullptr) {
        throw Error(ErrorCode::precondition, "task " + task.id.str() + " has no ground-truth facts");
      }
      const auto claims = extract_numbers(body);
      rule.fact_score = fact_accuracy(claims, *ctx.facts, ctx.tolerance.value_or(Tolerance{0.01, 1e-4}));
      details << " fact=" << *rule.fact_score << " over " << claims.size() << " claims";
    }
    if (cw.rule.contains("format")) {
      std::vector<FormatRule> rules;
      for (const auto* r : ctx.format_rules) rules.push_back(*r);
      auto fr = format_check(body, rules);
      rule.format_score = fr.score;
      rule.format_violations = std::move(fr.violations);
      details << " format=" << *rule.format_score << " (" << rule.format_violations.size()
              << " violations)";
    }
  }
  rule.details = details.str();

  std::map<JudgeKind, JudgeVerdict> judged;
  if (route.judge_weight > 0.0) {
    if (ctx.judge == nullptr) {
      throw Error(ErrorCode::unavailable, "route requires a judge but none is configured");
    }
    std::string source;
    for (const auto& doc : task.context_docs) {
      if (!source.empty()) source += "\n";
      source += doc;
    }
    if (source.empty()) source = task.prompt;
    for (JudgeKind kind : route.judge_kinds) {
      switch (kind) {
        case JudgeKind::consistency:
          judged[kind] = judge_consistency(source, body, *ctx.judge);
          break;
        case JudgeKind::structure:
          if (task.expected_themes.empty()) {
            throw Error(ErrorCode::precondition,
                        "structure judging needs expected themes on task " + task.id.str());
          }
          judged[kind] = judge_structure(body, task.expected_themes, *ctx.judge);
          break;
        case JudgeKind::style: judged[kind] = judge_style(body, *ctx.judge); break;
        case JudgeKind::reasoning_consistency: break;
      }
    }
  }
  return aggregate_reward(task.task_type, rule, judged, *ctx.routing, *ctx.weights);
}

}  // namespace finforge
