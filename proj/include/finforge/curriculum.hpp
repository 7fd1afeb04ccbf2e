#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "finforge/core.hpp"

namespace finforge {

enum class Stratum { core, learning, frontier };
enum class PruneReason { zero_variance_saturated, zero_variance_impossible };
enum class Pool { mastery, core, learning, frontier };

template <>
struct EnumNames<Stratum> {
  static constexpr std::string_view kind = "stratum";
  static constexpr std::array<std::string_view, 3> names{"core", "learning", "frontier"};
};
template <>
struct EnumNames<PruneReason> {
  static constexpr std::string_view kind = "prune reason";
  static constexpr std::array<std::string_view, 2> names{"zero_variance_saturated",
                                                         "zero_variance_impossible"};
};
template <>
struct EnumNames<Pool> {
  static constexpr std::string_view kind = "pool";
  static constexpr std::array<std::string_view, 4> names{"mastery", "core", "learning", "frontier"};
};

struct CurriculumConfig {
  int k = 10;
  double core_threshold = 0.8;
  double frontier_threshold = 0.1;
  double mastery_sample_prob = 0.2;
  double learning_share = 0.8;
  int mastery_streak = 3;
  int batch_size = 32;
  double success_cutoff = 1.0;

  void validate() const;
};

struct PassMeasurement {
  int k = 0;
  int successes = 0;
  std::string timestamp;
  bool operator==(const PassMeasurement&) const = default;
};

struct SampleStats {
  TaskId task_id;
  std::vector<PassMeasurement> pass_history;
  Stratum stratum = Stratum::learning;
  bool mastery = false;
  int consecutive_perfect = 0;

  /// Latest pass rate, if measured.
  std::optional<double> pass_rate() const;
  void validate(const CurriculumConfig& cfg) const;
  bool operator==(const SampleStats&) const = default;
};

struct Difficulty {
  double pass_rate = 0.0;
  Stratum stratum = Stratum::learning;
};

Stratum stratum_for(double pass_rate, const CurriculumConfig& cfg);
/// Requires exactly cfg.k rewards; success means reward >= cfg.success_cutoff.
Difficulty estimate_difficulty(std::span<const double> rollout_rewards, const CurriculumConfig& cfg);
/// Appends a pass@k measurement and re-derives the stratum of a task that
/// is not in the mastery pool.
void record_rollouts(SampleStats& stats, std::span<const double> rollout_rewards,
                     const CurriculumConfig& cfg, std::string timestamp);

struct BatchEntry {
  TaskId task_id;
  std::vector<double> rollout_rewards;
  Pool source = Pool::learning;
  bool operator==(const BatchEntry&) const = default;
};

struct PrunedEntry {
  TaskId task_id;
  PruneReason reason = PruneReason::zero_variance_saturated;
  std::vector<double> rollout_rewards;
  bool operator==(const PrunedEntry&) const = default;
};

struct Batch {
  Stratum stage = Stratum::core;
  std::vector<BatchEntry> entries;
  std::vector<PrunedEntry> pruned;
  std::map<Pool, std::size_t> composition;
  std::vector<std::string> notes;
  bool operator==(const Batch&) const = default;
};

/// Task selection for one batch. Each slot draws from the mastery pool with
/// probability mastery_sample_prob (when that pool is non-empty); other
/// slots draw from learning with probability learning_share and otherwise
/// from the stage pool (core for the core stage, frontier for the others).
/// Draws are without replacement; an empty pool falls through in a fixed
/// order and the fallback is noted.
Batch build_batch(std::span<const SampleStats> pool, const CurriculumConfig& cfg, Stratum stage,
                  std::uint64_t seed);

/// nullopt when the rewards vary. Constant 1 is saturated, constant 0 is
/// impossible, any other constant counts as saturated.
std::optional<PruneReason> classify_rewards(std::span<const double> rewards);
double sample_variance(std::span<const double> rewards);

/// Moves zero-variance entries to `pruned`; no backfill.
Batch prune_zero_variance(Batch batch);

struct TaskOutcome {
  TaskId task_id;
  std::vector<double> rollout_rewards;
};

/// Streak bookkeeping: an all-perfect appearance extends the streak and the
/// streak reaching cfg.mastery_streak grants mastery; any failure resets it
/// and demotes a mastered task to learning.
void update_mastery(std::map<TaskId, SampleStats>& stats, std::span<const TaskOutcome> results,
                    const CurriculumConfig& cfg);

/// Advances core -> learning -> frontier once the mean pass rate of the
/// active stratum exceeds core_threshold (or the stratum is empty).
Stratum next_stage(Stratum current, std::span<const SampleStats> pool, const CurriculumConfig& cfg);

}  // namespace finforge
