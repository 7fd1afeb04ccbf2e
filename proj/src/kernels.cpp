#include "finforge/kernels.hpp"

#include <cstddef>

namespace finforge::kernels {

namespace {

GenOutcome generate_one(const TaskGenerator& gen, const DeductionRequest& req) {
  GenOutcome out;
  try {
    out.task = gen.deduction_task(req.axiom, req.hidden_symbol, req.seed);
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

ScoreOutcome score_one(const ScoreJob& job, const ScoringContext& ctx) {
  ScoreOutcome out;
  try {
    if (job.task == nullptr) throw Error(ErrorCode::invalid_argument, "score job without a task");
    ScoringContext local = ctx;
    if (job.facts != nullptr) local.facts = job.facts;
    out.breakdown = score_response(*job.task, job.response, local);
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

}  // namespace

namespace serial {

std::vector<std::optional<PruneReason>> classify_groups(std::span<const std::vector<double>> groups) {
  std::vector<std::optional<PruneReason>> out(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) out[i] = classify_rewards(groups[i]);
  return out;
}

std::vector<GenOutcome> generate_deductions(const TaskGenerator& gen,
                                            std::span<const DeductionRequest> requests) {
  std::vector<GenOutcome> out(requests.size());
  for (std::size_t i = 0; i < requests.size(); ++i) out[i] = generate_one(gen, requests[i]);
  return out;
}

std::vector<ScoreOutcome> score_batch(std::span<const ScoreJob> jobs, const ScoringContext& ctx) {
  std::vector<ScoreOutcome> out(jobs.size());
  for (std::size_t i = 0; i < jobs.size(); ++i) out[i] = score_one(jobs[i], ctx);
  return out;
}

std::vector<double> fact_accuracy_batch(std::span<const std::vector<NumericMention>> claims,
                                        const GroundTruthFactSet& gt, Tolerance tol) {
  std::vector<double> out(claims.size());
  for (std::size_t i = 0; i < claims.size(); ++i) out[i] = fact_accuracy(claims[i], gt, tol);
  return out;
}

}  // namespace serial

namespace omp {

std::vector<std::optional<PruneReason>> classify_groups(std::span<const std::vector<double>> groups) {
  std::vector<std::optional<PruneReason>> out(groups.size());
  const auto n = static_cast<std::ptrdiff_t>(groups.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = classify_rewards(groups[i]);
  return out;
}

std::vector<GenOutcome> generate_deductions(const TaskGenerator& gen,
                                            std::span<const DeductionRequest> requests) {
  std::vector<GenOutcome> out(requests.size());
  const auto n = static_cast<std::ptrdiff_t>(requests.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = generate_one(gen, requests[i]);
  return out;
}

std::vector<ScoreOutcome> score_batch(std::span<const ScoreJob> jobs, const ScoringContext& ctx) {
  std::vector<ScoreOutcome> out(jobs.size());
  const auto n = static_cast<std::ptrdiff_t>(jobs.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = score_one(jobs[i], ctx);
  return out;
}

std::vector<double> fact_accuracy_batch(std::span<const std::vector<NumericMention>> claims,
                                        const GroundTruthFactSet& gt, Tolerance tol) {
  std::vector<double> out(claims.size());
  const auto n = static_cast<std::ptrdiff_t>(claims.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = fact_accuracy(claims[i], gt, tol);
  return out;
}

}  // namespace omp

}  // namespace finforge::kernels
