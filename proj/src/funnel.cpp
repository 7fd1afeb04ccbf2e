#include "finforge/funnel.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <cstring>
#include <set>
#include <sstream>
#include <thread>

#include "finforge/ruleverify.hpp"
#include "httplib.h"

namespace finforge {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

CandidateResponse CandidateResponse::from_output(std::string source_model, std::string_view output) {
  CandidateResponse out;
  out.source_model = std::move(source_model);
  ThinkSplit split;
  try {
    split = extract_think(output);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::malformed) throw;
    split.body = std::string(output);
  }
  out.reasoning = split.think.value_or("");
  if (auto boxed = unbox(split.body)) {
    out.answer = trim(*boxed);
    return out;
  }
  std::istringstream lines(split.body);
  std::string line;
  while (std::getline(lines, line)) {
    std::string t = trim(line);
    if (!t.empty()) out.answer = std::move(t);
  }
  return out;
}

void VoteConfig::validate() const {
  if (min_responses < 3) {
    throw Error(ErrorCode::invalid_argument,
                "min_responses must be at least 3, got " + std::to_string(min_responses));
  }
  if (!(agree_fraction > 0.5 && agree_fraction <= 1.0)) {
    throw Error(ErrorCode::invalid_argument, "agree_fraction must lie in (0.5, 1]");
  }
}

VoteTally tally_votes(std::span<const CandidateResponse> responses) {
  VoteTally tally;
  tally.total = responses.size();
  std::vector<NormalizedAnswer> reps;
  for (std::size_t i = 0; i < responses.size(); ++i) {
    const NormalizedAnswer n = normalize_answer(responses[i].answer);
    std::size_t g = 0;
    for (; g < reps.size(); ++g) {
      if (answers_equivalent(reps[g], n)) break;
    }
    if (g == reps.size()) {
      reps.push_back(n);
      tally.groups.push_back(VoteGroup{n.text, n.number, {}});
    }
    tally.groups[g].members.push_back(i);
  }
  std::stable_sort(tally.groups.begin(), tally.groups.end(),
                   [](const auto& a, const auto& b) { return a.members.size() > b.members.size(); });
  if (tally.total > 0 && !tally.groups.empty()) {
    tally.modal_share = static_cast<double>(tally.groups.front().members.size()) /
                        static_cast<double>(tally.total);
  }
  return tally;
}

namespace {

std::string stdin_payload(const VerificationProgram& program) {
  std::string out;
  for (const auto& [k, v] : program.inputs) out += k + "=" + v + "\n";
  return out;
}

const char* interpreter(const std::string& language) {
  if (language == "python3") return "python3";
  if (language == "sh") return "sh";
  throw Error(ErrorCode::invalid_argument, "unsupported program language '" + language + "'");
}

void ignore_sigpipe() {
  static const bool once = [] {
    std::signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)once;
}

int decode_status(int status) {
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
  return -1;
}

}  // namespace

ExecResult SubprocessExecutor::run(const VerificationProgram& program) {
  ignore_sigpipe();
  const char* interp = interpreter(program.language);
  const std::string input = stdin_payload(program);

  int in_pipe[2];
  int out_pipe[2];
  if (pipe2(in_pipe, O_CLOEXEC) != 0) {
    throw Error(ErrorCode::unavailable, "pipe failed", std::strerror(errno));
  }
  if (pipe2(out_pipe, O_CLOEXEC) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    throw Error(ErrorCode::unavailable, "pipe failed", std::strerror(errno));
  }
  std::string source = program.source;
  std::string dash_c = "-c";
  std::string interp_s = interp;
  char* argv[] = {interp_s.data(), dash_c.data(), source.data(), nullptr};

  const pid_t pid = fork();
  if (pid < 0) {
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) close(fd);
    throw Error(ErrorCode::unavailable, "fork failed", std::strerror(errno));
  }
  if (pid == 0) {
    setpgid(0, 0);
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    const int devnull = open("/dev/null", O_WRONLY);
    if (devnull >= 0) dup2(devnull, STDERR_FILENO);
    execvp(argv[0], argv);
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  int in_fd = in_pipe[1];
  const int out_fd = out_pipe[0];
  fcntl(in_fd, F_SETFL, O_NONBLOCK);

  const auto deadline = std::chrono::steady_clock::now() + limits_.timeout;
  const auto kill_child = [&] {
    kill(-pid, SIGKILL);
    kill(pid, SIGKILL);
    int st = 0;
    waitpid(pid, &st, 0);
    if (in_fd >= 0) close(in_fd);
    close(out_fd);
  };

  std::size_t written = 0;
  if (input.empty()) {
    close(in_fd);
    in_fd = -1;
  }
  ExecResult result;
  char buf[65536];
  for (;;) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      kill_child();
      throw Error(ErrorCode::timeout, "program exceeded " + std::to_string(limits_.timeout.count()) +
                                          " ms wall clock");
    }
    pollfd fds[2] = {{out_fd, POLLIN, 0}, {in_fd, POLLOUT, 0}};
    const int n = poll(fds, in_fd >= 0 ? 2 : 1, static_cast<int>(left.count()));
    if (n < 0) {
      if (errno == EINTR) continue;
      kill_child();
      throw Error(ErrorCode::unavailable, "poll failed", std::strerror(errno));
    }
    if (in_fd >= 0 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
      const ssize_t w = write(in_fd, input.data() + written, input.size() - written);
      if (w > 0) written += static_cast<std::size_t>(w);
      if (w < 0 && errno != EAGAIN && errno != EINTR) written = input.size();
      if (written >= input.size()) {
        close(in_fd);
        in_fd = -1;
      }
    }
    if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
      const ssize_t r = read(out_fd, buf, sizeof buf);
      if (r < 0 && errno == EINTR) continue;
      if (r <= 0) break;
      result.stdout_text.append(buf, static_cast<std::size_t>(r));
      if (result.stdout_text.size() > limits_.max_output_bytes) {
        kill_child();
        throw Error(ErrorCode::precondition, "program output exceeds " +
                                                 std::to_string(limits_.max_output_bytes) + " bytes");
      }
    }
  }
  if (in_fd >= 0) close(in_fd);
  close(out_fd);

  int status = 0;
  for (;;) {
    const pid_t w = waitpid(pid, &status, WNOHANG);
    if (w == pid) break;
    if (w < 0 && errno != EINTR) {
      throw Error(ErrorCode::unavailable, "waitpid failed", std::strerror(errno));
    }
    if (std::chrono::steady_clock::now() >= deadline) {
      kill(-pid, SIGKILL);
      kill(pid, SIGKILL);
      waitpid(pid, &status, 0);
      throw Error(ErrorCode::timeout, "program exceeded " + std::to_string(limits_.timeout.count()) +
                                          " ms wall clock");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  result.exit_status = decode_status(status);
  if (result.exit_status == 127) {
    throw Error(ErrorCode::unavailable, std::string("interpreter '") + interp + "' could not be started");
  }
  return result;
}

HttpExecutor::HttpExecutor(std::string endpoint, ExecutorLimits limits) : limits_(limits) {
  const auto scheme = endpoint.find("://");
  const auto path_pos = endpoint.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (scheme == std::string::npos || path_pos == std::string::npos) {
    throw Error(ErrorCode::invalid_argument,
                "executor endpoint must look like http://host:port/path: " + endpoint);
  }
  host_ = endpoint.substr(0, path_pos);
  path_ = endpoint.substr(path_pos);
}

ExecResult HttpExecutor::run(const VerificationProgram& program) {
  nlohmann::json body{{"program", {{"language", program.language}, {"source", program.source}}},
                      {"inputs", program.inputs}};
  httplib::Client client(host_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(limits_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(limits_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  auto res = client.Post(path_, body.dump(), "application/json");
  if (!res) {
    const bool timed_out = res.error() == httplib::Error::Read;
    throw Error(timed_out ? ErrorCode::timeout : ErrorCode::unavailable,
                "executor unreachable at " + host_ + path_, httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::unavailable, "executor returned HTTP " + std::to_string(res->status),
                res->body);
  }
  const auto reply = nlohmann::json::parse(res->body, nullptr, false);
  if (reply.is_discarded() || !reply.is_object() || !reply.contains("stdout") ||
      !reply["stdout"].is_string() || !reply.contains("exit_status") ||
      !reply["exit_status"].is_number_integer()) {
    throw Error(ErrorCode::malformed, "executor reply must be {stdout, exit_status}", res->body);
  }
  ExecResult out{reply["stdout"].get<std::string>(), reply["exit_status"].get<int>()};
  if (out.stdout_text.size() > limits_.max_output_bytes) {
    throw Error(ErrorCode::precondition, "program output exceeds the output cap");
  }
  return out;
}

AdjudicationItem AdjudicationQueue::open(const TaskId& task, std::vector<CandidateAnswer> candidates,
                                         std::string summary) {
  std::unique_lock lock(mu_);
  for (const auto& it : items_) {
    if (it.task_id == task && it.status == AdjudicationStatus::pending) {
      throw Error(ErrorCode::conflict,
                  "task " + task.str() + " already has pending adjudication " + it.id.str());
    }
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "adj-%06zu", next_++);
  AdjudicationItem item;
  item.id = ItemId(buf);
  item.task_id = task;
  item.candidate_answers = std::move(candidates);
  item.disagreement_summary = std::move(summary);
  item.created_at = clock_();
  index_[item.id] = items_.size();
  items_.push_back(item);
  return item;
}

AdjudicationItem AdjudicationQueue::resolve(const ItemId& id, GoldPayload decision,
                                            std::string expert_id) {
  if (expert_id.empty()) throw Error(ErrorCode::invalid_argument, "expert_id is required");
  std::unique_lock lock(mu_);
  auto it = index_.find(id);
  if (it == index_.end()) throw Error(ErrorCode::not_found, "unknown adjudication item " + id.str());
  AdjudicationItem& item = items_[it->second];
  if (item.status == AdjudicationStatus::resolved) {
    throw Error(ErrorCode::conflict, "adjudication item " + id.str() + " is already resolved",
                "resolved by " + item.resolution->expert_id);
  }
  item.status = AdjudicationStatus::resolved;
  item.resolution = Resolution{GoldAnswer(std::move(decision), GoldMethod::human),
                               std::move(expert_id), clock_()};
  return item;
}

void AdjudicationQueue::restore(AdjudicationItem item) {
  if ((item.status == AdjudicationStatus::resolved) != item.resolution.has_value()) {
    throw Error(ErrorCode::malformed, "adjudication item " + item.id.str() +
                                          " has inconsistent status and resolution");
  }
  std::unique_lock lock(mu_);
  unsigned long n = 0;
  if (std::sscanf(item.id.str().c_str(), "adj-%lu", &n) == 1) next_ = std::max<std::size_t>(next_, n + 1);
  auto it = index_.find(item.id);
  if (it != index_.end()) {
    items_[it->second] = std::move(item);
    return;
  }
  index_[item.id] = items_.size();
  items_.push_back(std::move(item));
}

AdjudicationItem AdjudicationQueue::get(const ItemId& id) const {
  std::shared_lock lock(mu_);
  auto it = index_.find(id);
  if (it == index_.end()) throw Error(ErrorCode::not_found, "unknown adjudication item " + id.str());
  return items_[it->second];
}

std::optional<AdjudicationItem> AdjudicationQueue::pending_for(const TaskId& task) const {
  std::shared_lock lock(mu_);
  for (const auto& it : items_) {
    if (it.task_id == task && it.status == AdjudicationStatus::pending) return it;
  }
  return std::nullopt;
}

std::vector<AdjudicationItem> AdjudicationQueue::list(std::optional<AdjudicationStatus> status) const {
  std::shared_lock lock(mu_);
  std::vector<AdjudicationItem> out;
  for (const auto& it : items_) {
    if (!status || it.status == *status) out.push_back(it);
  }
  return out;
}

std::size_t AdjudicationQueue::pending_count() const {
  std::shared_lock lock(mu_);
  return static_cast<std::size_t>(std::count_if(items_.begin(), items_.end(), [](const auto& it) {
    return it.status == AdjudicationStatus::pending;
  }));
}

std::shared_ptr<std::mutex> Funnel::lock_for(const TaskId& id) {
  std::lock_guard lock(locks_mu_);
  auto& slot = locks_[id];
  if (!slot) slot = std::make_shared<std::mutex>();
  return slot;
}

namespace {

std::optional<double> parse_answer_line(const std::string& stdout_text) {
  const std::string t = trim(stdout_text);
  if (t.empty() || t.find('\n') != std::string::npos) return std::nullopt;
  double v = 0.0;
  const char* first = t.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

VerificationRecord Funnel::verify_l1(InstructionTask& task, Executor* executor) {
  auto mu = lock_for(task.id);
  std::lock_guard guard(*mu);
  if (task.level == VerificationLevel::L2 || task.level == VerificationLevel::L3) {
    throw Error(ErrorCode::conflict, "task " + task.id.str() + " is already at " +
                                         std::string(enum_name(task.level)));
  }

  VerificationRecord rec;
  rec.task_id = task.id;
  rec.level = VerificationLevel::L1;

  if (task.derivation) {
    const auto& d = *task.derivation;
    const FinancialAxiom& axiom = axioms_.get(d.axiom);
    expr::Bindings visible(d.sampled_values.begin(), d.sampled_values.end());
    const auto recomputed = solve_hidden(axiom, d.hidden_symbol, visible);
    if (!task.gold) {
      throw Error(ErrorCode::internal, "axiom task " + task.id.str() + " carries no gold");
    }
    const auto* gold = std::get_if<NumericGold>(&task.gold->payload());
    if (!recomputed || gold == nullptr ||
        std::fabs(*recomputed - gold->value) > 1e-9 * std::max(1.0, std::fabs(gold->value))) {
      throw Error(ErrorCode::internal,
                  "axiom recompute disagrees with stored gold for task " + task.id.str(),
                  "recomputed=" + (recomputed ? std::to_string(*recomputed) : std::string("none")));
    }
    expr::Bindings all = visible;
    all[d.hidden_symbol] = *recomputed;
    rec.evidence = {{"path", "axiom"},
                    {"axiom", d.axiom.str()},
                    {"hidden_symbol", d.hidden_symbol},
                    {"recomputed", *recomputed},
                    {"gold", gold->value},
                    {"residual", relation_residual(axiom, all)}};
  } else if (task.program) {
    if (executor == nullptr) {
      throw Error(ErrorCode::precondition,
                  "task " + task.id.str() + " has a verification program but no executor is configured");
    }
    const ExecResult run = executor->run(*task.program);
    if (run.exit_status != 0) {
      throw Error(ErrorCode::precondition,
                  "verification program exited with status " + std::to_string(run.exit_status),
                  run.stdout_text.substr(0, 512));
    }
    const auto value = parse_answer_line(run.stdout_text);
    if (!value) {
      throw Error(ErrorCode::malformed, "verification program must print a single numeric line",
                  run.stdout_text.substr(0, 512));
    }
    const double scaled = *value * task.program->output_scale;
    task.gold = GoldAnswer(NumericGold{scaled, task.program->tol_abs, task.program->tol_rel},
                           GoldMethod::code_exec);
    rec.evidence = {{"path", "code_exec"},
                    {"stdout", trim(run.stdout_text)},
                    {"exit_status", run.exit_status},
                    {"output_scale", task.program->output_scale},
                    {"gold", scaled}};
  } else {
    throw Error(ErrorCode::precondition,
                "task " + task.id.str() + " has neither an axiom derivation nor a verification program");
  }
  task.promote(VerificationLevel::L1);
  rec.timestamp = clock_();
  return rec;
}

L2Outcome Funnel::verify_l2(InstructionTask& task, std::span<const CandidateResponse> responses,
                            const VoteConfig& cfg, JudgeClient* judge) {
  cfg.validate();
  auto mu = lock_for(task.id);
  std::lock_guard guard(*mu);
  if (task.level == VerificationLevel::L1 ||
      (task.gold && task.gold->confidence() == GoldConfidence::deterministic)) {
    throw Error(ErrorCode::precondition,
                "task " + task.id.str() + " has a deterministic gold; L1 takes priority over voting");
  }
  if (task.level != VerificationLevel::unverified) {
    throw Error(ErrorCode::conflict, "task " + task.id.str() + " is already at " +
                                         std::string(enum_name(task.level)));
  }
  if (auto pending = queue_.pending_for(task.id)) {
    throw Error(ErrorCode::conflict,
                "task " + task.id.str() + " awaits adjudication " + pending->id.str());
  }
  if (responses.size() < static_cast<std::size_t>(cfg.min_responses)) {
    throw Error(ErrorCode::invalid_argument, "voting needs at least " +
                                                 std::to_string(cfg.min_responses) + " responses, got " +
                                                 std::to_string(responses.size()));
  }

  const VoteTally tally = tally_votes(responses);
  const VoteGroup& modal = tally.groups.front();
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : tally.groups) {
    nlohmann::json models = nlohmann::json::array();
    for (auto i : g.members) models.push_back(responses[i].source_model);
    groups.push_back({{"answer", g.answer}, {"count", g.members.size()}, {"models", models}});
  }
  nlohmann::json evidence{{"responses", tally.total},
                          {"groups", groups},
                          {"modal_answer", modal.answer},
                          {"modal_count", modal.members.size()},
                          {"modal_share", tally.modal_share},
                          {"agree_fraction", cfg.agree_fraction}};

  const auto escalate = [&](std::string summary) -> L2Outcome {
    std::vector<CandidateAnswer> candidates;
    for (const auto& r : responses) candidates.push_back({r.source_model, r.answer});
    std::string groups_text;
    for (const auto& g : tally.groups) {
      if (!groups_text.empty()) groups_text += ", ";
      groups_text += "'" + g.answer + "' x" + std::to_string(g.members.size());
    }
    return queue_.open(task.id, std::move(candidates), summary + "; answers: " + groups_text);
  };

  const double needed = cfg.agree_fraction * static_cast<double>(tally.total);
  if (static_cast<double>(modal.members.size()) + 1e-9 < needed) {
    return escalate("modal share " + fixed2(tally.modal_share) + " below " + fixed2(cfg.agree_fraction));
  }

  nlohmann::json pair_scores = nlohmann::json::array();
  if (cfg.require_reasoning_consistency) {
    if (judge == nullptr) return escalate("no judge available to check reasoning consistency");
    for (std::size_t a = 0; a < modal.members.size(); ++a) {
      for (std::size_t b = a + 1; b < modal.members.size(); ++b) {
        const auto& ra = responses[modal.members[a]];
        const auto& rb = responses[modal.members[b]];
        JudgeVerdict v;
        try {
          JudgeRequest req;
          req.kind = JudgeKind::reasoning_consistency;
          req.source = ra.reasoning;
          req.output = rb.reasoning;
          v = judge->evaluate(req);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::unavailable && e.code() != ErrorCode::timeout) throw;
          return escalate(std::string("judge unavailable: ") + e.what());
        }
        pair_scores.push_back({{"a", ra.source_model}, {"b", rb.source_model}, {"score", v.score}});
        if (v.score < 0.5) {
          return escalate("reasoning of " + ra.source_model + " and " + rb.source_model +
                          " conflicts (score " + fixed2(v.score) + ")");
        }
      }
    }
  }
  evidence["reasoning_checked"] = cfg.require_reasoning_consistency;
  evidence["pair_scores"] = pair_scores;

  if (modal.number) {
    task.gold = GoldAnswer(NumericGold{*modal.number, 0.0, 1e-6}, GoldMethod::vote);
  } else {
    task.gold = GoldAnswer(TextGold{modal.answer}, GoldMethod::vote);
  }
  task.promote(VerificationLevel::L2);
  return VerificationRecord{task.id, VerificationLevel::L2, std::move(evidence), clock_()};
}

VerificationRecord Funnel::resolve_adjudication(const ItemId& item_id, GoldPayload decision,
                                                const std::string& expert_id, InstructionTask& task) {
  auto mu = lock_for(task.id);
  std::lock_guard guard(*mu);
  const AdjudicationItem item = queue_.get(item_id);
  if (item.task_id != task.id) {
    throw Error(ErrorCode::invalid_argument,
                "adjudication " + item_id.str() + " belongs to task " + item.task_id.str());
  }
  const AdjudicationItem resolved = queue_.resolve(item_id, std::move(decision), expert_id);
  task.gold = resolved.resolution->gold;
  task.promote(VerificationLevel::L3);
  return VerificationRecord{task.id,
                            VerificationLevel::L3,
                            {{"adjudication_id", item_id.str()}, {"expert_id", expert_id}},
                            resolved.resolution->resolved_at};
}

namespace {

const std::set<std::string>& filter_stopwords() {
  static const std::set<std::string> words{
      "a",   "an",   "the",  "of",   "to",   "in",   "is",   "was",  "were", "be",  "by",
      "for", "and",  "or",   "at",   "as",   "on",   "from", "with", "about", "its", "it",
      "this", "that", "are", "approximately", "around", "roughly", "nearly", "which", "than",
      "has", "have", "had", "reached", "stood", "came", "amounted", "totaled", "equals", "equal",
      "yuan", "rmb", "cny", "usd", "percent"};
  return words;
}

/// Last two content words before `pos` within the same sentence.
std::string context_key(std::string_view text, std::size_t pos) {
  std::size_t start = 0;
  for (std::size_t i = pos; i > 0; --i) {
    const char c = text[i - 1];
    if (c == '\n' || ((c == '.' || c == ';' || c == '!' || c == '?') && i < pos &&
                      (text[i] == ' ' || text[i] == '\n'))) {
      start = i;
      break;
    }
  }
  std::vector<std::string> words;
  std::string cur;
  for (std::size_t i = start; i <= pos; ++i) {
    const char c = i < pos ? text[i] : ' ';
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) {
      cur += static_cast<char>(c | 0x20);
    } else {
      if (!cur.empty() && !filter_stopwords().contains(cur)) words.push_back(cur);
      cur.clear();
    }
  }
  if (words.empty()) return {};
  if (words.size() == 1) return words.back();
  return words[words.size() - 2] + " " + words.back();
}

using KeyFacts = std::map<std::pair<std::string, std::string>, std::vector<double>>;

KeyFacts key_facts(const CandidateResponse& r) {
  KeyFacts out;
  for (const std::string* text : {&r.reasoning, &r.answer}) {
    for (const auto& m : extract_numbers(*text)) {
      std::string key = context_key(*text, m.span.begin);
      if (key.empty()) continue;
      out[{std::move(key), to_string(m.unit)}].push_back(m.value);
    }
  }
  return out;
}

bool close_enough(double a, double b) {
  return std::fabs(a - b) <= 1e-6 * std::max(std::fabs(a), std::fabs(b));
}

}  // namespace

std::vector<CandidateResponse> semantic_consistency_filter(
    std::span<const CandidateResponse> candidates) {
  if (candidates.size() < 2) return {candidates.begin(), candidates.end()};
  const NormalizedAnswer first = normalize_answer(candidates[0].answer);
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    if (!answers_equivalent(first, normalize_answer(candidates[i].answer))) return {};
  }
  std::vector<KeyFacts> facts;
  for (const auto& c : candidates) facts.push_back(key_facts(c));
  for (std::size_t i = 0; i < facts.size(); ++i) {
    for (std::size_t j = i + 1; j < facts.size(); ++j) {
      for (const auto& [key, values] : facts[i]) {
        auto it = facts[j].find(key);
        if (it == facts[j].end()) continue;
        const bool shared = std::any_of(values.begin(), values.end(), [&](double a) {
          return std::any_of(it->second.begin(), it->second.end(),
                             [&](double b) { return close_enough(a, b); });
        });
        if (!shared) return {};
      }
    }
  }
  return {candidates.begin(), candidates.end()};
}

}  // namespace finforge
