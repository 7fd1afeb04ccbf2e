#include "finforge/curriculum.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace finforge {

void CurriculumConfig::validate() const {
  if (k < 1) throw Error(ErrorCode::invalid_argument, "k must be positive");
  for (double p : {core_threshold, frontier_threshold, mastery_sample_prob, learning_share}) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(ErrorCode::invalid_argument, "curriculum fractions must lie in [0,1]");
    }
  }
  if (!(frontier_threshold < core_threshold)) {
    throw Error(ErrorCode::invalid_argument, "frontier_threshold must be below core_threshold");
  }
  if (mastery_streak < 1) throw Error(ErrorCode::invalid_argument, "mastery_streak must be positive");
  if (batch_size < 1) throw Error(ErrorCode::invalid_argument, "batch_size must be positive");
}

std::optional<double> SampleStats::pass_rate() const {
  if (pass_history.empty()) return std::nullopt;
  const auto& m = pass_history.back();
  return static_cast<double>(m.successes) / static_cast<double>(m.k);
}

void SampleStats::validate(const CurriculumConfig& cfg) const {
  for (const auto& m : pass_history) {
    if (m.k < 1 || m.successes < 0 || m.successes > m.k) {
      throw Error(ErrorCode::invalid_argument, "pass measurement of task " + task_id.str() +
                                                   " has successes outside [0, k]");
    }
  }
  if (consecutive_perfect < 0) {
    throw Error(ErrorCode::invalid_argument, "negative streak for task " + task_id.str());
  }
  if (mastery && consecutive_perfect < cfg.mastery_streak) {
    throw Error(ErrorCode::invalid_argument,
                "task " + task_id.str() + " is mastered with a streak below " +
                    std::to_string(cfg.mastery_streak));
  }
}

Stratum stratum_for(double pass_rate, const CurriculumConfig& cfg) {
  if (pass_rate >= cfg.core_threshold) return Stratum::core;
  if (pass_rate <= cfg.frontier_threshold) return Stratum::frontier;
  return Stratum::learning;
}

Difficulty estimate_difficulty(std::span<const double> rollout_rewards, const CurriculumConfig& cfg) {
  if (rollout_rewards.size() != static_cast<std::size_t>(cfg.k)) {
    throw Error(ErrorCode::invalid_argument, "expected " + std::to_string(cfg.k) + " rollouts, got " +
                                                 std::to_string(rollout_rewards.size()));
  }
  const auto successes = std::count_if(rollout_rewards.begin(), rollout_rewards.end(),
                                       [&](double r) { return r >= cfg.success_cutoff; });
  const double rate = static_cast<double>(successes) / static_cast<double>(cfg.k);
  return {rate, stratum_for(rate, cfg)};
}

void record_rollouts(SampleStats& stats, std::span<const double> rollout_rewards,
                     const CurriculumConfig& cfg, std::string timestamp) {
  const Difficulty d = estimate_difficulty(rollout_rewards, cfg);
  stats.pass_history.push_back(
      {cfg.k, static_cast<int>(std::lround(d.pass_rate * cfg.k)), std::move(timestamp)});
  if (!stats.mastery) stats.stratum = d.stratum;
}

namespace {

Pool pool_of(Stratum s) {
  switch (s) {
    case Stratum::core: return Pool::core;
    case Stratum::learning: return Pool::learning;
    case Stratum::frontier: return Pool::frontier;
  }
  return Pool::learning;
}

std::array<Pool, 4> fallback_order(Pool wanted) {
  switch (wanted) {
    case Pool::mastery: return {Pool::mastery, Pool::learning, Pool::frontier, Pool::core};
    case Pool::core: return {Pool::core, Pool::learning, Pool::frontier, Pool::mastery};
    case Pool::learning: return {Pool::learning, Pool::frontier, Pool::core, Pool::mastery};
    case Pool::frontier: return {Pool::frontier, Pool::learning, Pool::core, Pool::mastery};
  }
  return {Pool::learning, Pool::frontier, Pool::core, Pool::mastery};
}

}  // namespace

Batch build_batch(std::span<const SampleStats> pool, const CurriculumConfig& cfg, Stratum stage,
                  std::uint64_t seed) {
  cfg.validate();
  if (pool.empty()) throw Error(ErrorCode::precondition, "empty pool");

  std::map<Pool, std::vector<const SampleStats*>> pools;
  for (const auto& s : pool) pools[s.mastery ? Pool::mastery : pool_of(s.stratum)].push_back(&s);
  for (auto& [_, members] : pools) {
    std::sort(members.begin(), members.end(),
              [](const auto* a, const auto* b) { return a->task_id < b->task_id; });
  }
  const bool has_mastery = !pools[Pool::mastery].empty();
  const Pool stage_pool = stage == Stratum::core ? Pool::core : Pool::frontier;

  Batch batch;
  batch.stage = stage;
  Rng rng(seed);
  for (int slot = 0; slot < cfg.batch_size; ++slot) {
    const double u_mastery = rng.uniform();
    const double u_share = rng.uniform();
    Pool wanted;
    if (has_mastery && u_mastery < cfg.mastery_sample_prob) {
      wanted = Pool::mastery;
    } else {
      wanted = u_share < cfg.learning_share ? Pool::learning : stage_pool;
    }
    std::optional<Pool> chosen;
    for (Pool p : fallback_order(wanted)) {
      if (!pools[p].empty()) {
        chosen = p;
        break;
      }
    }
    if (!chosen) {
      batch.notes.push_back("pool exhausted after " + std::to_string(slot) + " slots");
      break;
    }
    if (*chosen != wanted) {
      batch.notes.push_back("slot " + std::to_string(slot) + ": " + std::string(enum_name(wanted)) +
                            " pool empty, drew from " + std::string(enum_name(*chosen)));
    }
    auto& members = pools[*chosen];
    const std::size_t pick = rng.index(members.size());
    batch.entries.push_back({members[pick]->task_id, {}, *chosen});
    members.erase(members.begin() + static_cast<std::ptrdiff_t>(pick));
    ++batch.composition[*chosen];
  }
  return batch;
}

std::optional<PruneReason> classify_rewards(std::span<const double> rewards) {
  if (rewards.empty()) return std::nullopt;
  const double first = rewards.front();
  for (double r : rewards) {
    if (r != first) return std::nullopt;
  }
  return first == 0.0 ? PruneReason::zero_variance_impossible : PruneReason::zero_variance_saturated;
}

double sample_variance(std::span<const double> rewards) {
  if (rewards.size() < 2) return 0.0;
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) /
                      static_cast<double>(rewards.size());
  double ss = 0.0;
  for (double r : rewards) ss += (r - mean) * (r - mean);
  return ss / static_cast<double>(rewards.size() - 1);
}

Batch prune_zero_variance(Batch batch) {
  for (const auto& e : batch.entries) {
    if (e.rollout_rewards.size() < 2) {
      throw Error(ErrorCode::invalid_argument,
                  "entry " + e.task_id.str() + " has fewer than 2 rollout rewards");
    }
  }
  std::vector<BatchEntry> kept;
  kept.reserve(batch.entries.size());
  for (auto& e : batch.entries) {
    if (auto reason = classify_rewards(e.rollout_rewards)) {
      batch.pruned.push_back({e.task_id, *reason, std::move(e.rollout_rewards)});
    } else {
      kept.push_back(std::move(e));
    }
  }
  batch.entries = std::move(kept);
  return batch;
}

void update_mastery(std::map<TaskId, SampleStats>& stats, std::span<const TaskOutcome> results,
                    const CurriculumConfig& cfg) {
  for (const auto& r : results) {
    if (!stats.contains(r.task_id)) {
      throw Error(ErrorCode::not_found, "no stats tracked for task " + r.task_id.str());
    }
  }
  for (const auto& r : results) {
    SampleStats& s = stats.at(r.task_id);
    const bool perfect = !r.rollout_rewards.empty() &&
                         std::all_of(r.rollout_rewards.begin(), r.rollout_rewards.end(),
                                     [&](double x) { return x >= cfg.success_cutoff; });
    if (perfect) {
      ++s.consecutive_perfect;
      if (s.consecutive_perfect >= cfg.mastery_streak) s.mastery = true;
    } else {
      s.consecutive_perfect = 0;
      if (s.mastery) {
        s.mastery = false;
        s.stratum = Stratum::learning;
      }
    }
  }
}

Stratum next_stage(Stratum current, std::span<const SampleStats> pool, const CurriculumConfig& cfg) {
  if (current == Stratum::frontier) return current;
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& s : pool) {
    if (s.mastery || s.stratum != current) continue;
    if (auto rate = s.pass_rate()) {
      sum += *rate;
      ++n;
    }
  }
  const bool advance = n == 0 || sum / static_cast<double>(n) > cfg.core_threshold;
  if (!advance) return current;
  return current == Stratum::core ? Stratum::learning : Stratum::frontier;
}

}  // namespace finforge
