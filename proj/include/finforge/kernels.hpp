#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "finforge/curriculum.hpp"
#include "finforge/judgeverify.hpp"
#include "finforge/kbgen.hpp"
#include "finforge/ruleverify.hpp"

/// Batch loops in two flavours with identical results: `serial` is the
/// reference, `omp` splits iterations across OpenMP threads. Per-item
/// failures are captured in the outcome instead of escaping the loop.
namespace finforge::kernels {

struct GenOutcome {
  std::optional<InstructionTask> task;
  std::string error;
};

struct ScoreOutcome {
  std::optional<RewardBreakdown> breakdown;
  std::string error;
};

struct ScoreJob {
  const InstructionTask* task = nullptr;
  std::string response;
  const GroundTruthFactSet* facts = nullptr;  // overrides the context's facts when set
};

namespace serial {
std::vector<std::optional<PruneReason>> classify_groups(std::span<const std::vector<double>> groups);
std::vector<GenOutcome> generate_deductions(const TaskGenerator& gen,
                                            std::span<const DeductionRequest> requests);
std::vector<ScoreOutcome> score_batch(std::span<const ScoreJob> jobs, const ScoringContext& ctx);
std::vector<double> fact_accuracy_batch(std::span<const std::vector<NumericMention>> claims,
                                        const GroundTruthFactSet& gt, Tolerance tol);
}  // namespace serial

namespace omp {
std::vector<std::optional<PruneReason>> classify_groups(std::span<const std::vector<double>> groups);
std::vector<GenOutcome> generate_deductions(const TaskGenerator& gen,
                                            std::span<const DeductionRequest> requests);
std::vector<ScoreOutcome> score_batch(std::span<const ScoreJob> jobs, const ScoringContext& ctx);
std::vector<double> fact_accuracy_batch(std::span<const std::vector<NumericMention>> claims,
                                        const GroundTruthFactSet& gt, Tolerance tol);
}  // namespace omp

}  // namespace finforge::kernels
