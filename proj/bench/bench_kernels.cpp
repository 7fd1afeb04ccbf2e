// Serial reference vs OpenMP kernels on the batch loops.

#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "finforge/engine.hpp"
#include "finforge/kernels.hpp"
#include "finforge/serialize.hpp"

using namespace finforge;

namespace {

struct Fixture {
  AxiomRegistry axioms;
  KnowledgeBase kb;
  TemplateRegistry templates;
  std::vector<DeductionRequest> requests;
  std::vector<InstructionTask> tasks;

  Fixture() {
    for_each_jsonl(std::string(FINFORGE_DATA_DIR) + "/axioms.jsonl",
                   [&](std::size_t, const nlohmann::json& j) { axioms.register_axiom(json::decode_axiom(j)); });
    const auto ids = axioms.ids();
    for (std::size_t i = 0; i < 512; ++i) {
      const auto& ax = axioms.get(ids[i % ids.size()]);
      requests.push_back({ax.id, ax.relation.lhs, mix_seed(7, i)});
    }
    TaskGenerator gen(axioms, kb, templates);
    for (const auto& r : requests) tasks.push_back(gen.deduction_task(r.axiom, r.hidden_symbol, r.seed));
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

std::vector<std::vector<double>> reward_groups(std::size_t n) {
  Rng rng(11);
  std::vector<std::vector<double>> groups(n, std::vector<double>(10));
  for (auto& g : groups) {
    const double p = rng.uniform();
    for (auto& r : g) r = rng.uniform() < p ? 1.0 : 0.0;
  }
  return groups;
}

std::vector<kernels::ScoreJob> score_jobs() {
  std::vector<kernels::ScoreJob> jobs;
  for (const auto& t : fixture().tasks) {
    const auto& g = std::get<NumericGold>(t.gold->payload());
    jobs.push_back({&t, "The result is \\boxed{" + std::to_string(g.value) + "}", nullptr});
  }
  return jobs;
}

ScoringContext context() {
  static const VerifierRouting routing = VerifierRouting::defaults();
  static const RewardWeights weights = RewardWeights::defaults();
  ScoringContext ctx;
  ctx.routing = &routing;
  ctx.weights = &weights;
  return ctx;
}

void BM_ClassifySerial(benchmark::State& state) {
  const auto groups = reward_groups(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::classify_groups(groups));
}
void BM_ClassifyOmp(benchmark::State& state) {
  const auto groups = reward_groups(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::omp::classify_groups(groups));
}

void BM_GenerateSerial(benchmark::State& state) {
  const auto& f = fixture();
  TaskGenerator gen(f.axioms, f.kb, f.templates);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::generate_deductions(gen, f.requests));
}
void BM_GenerateOmp(benchmark::State& state) {
  const auto& f = fixture();
  TaskGenerator gen(f.axioms, f.kb, f.templates);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::omp::generate_deductions(gen, f.requests));
}

void BM_ScoreSerial(benchmark::State& state) {
  const auto jobs = score_jobs();
  const auto ctx = context();
  for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::score_batch(jobs, ctx));
}
void BM_ScoreOmp(benchmark::State& state) {
  const auto jobs = score_jobs();
  const auto ctx = context();
  for (auto _ : state) benchmark::DoNotOptimize(kernels::omp::score_batch(jobs, ctx));
}

}  // namespace

BENCHMARK(BM_ClassifySerial)->Arg(10000)->Arg(100000);
BENCHMARK(BM_ClassifyOmp)->Arg(10000)->Arg(100000);
BENCHMARK(BM_GenerateSerial);
BENCHMARK(BM_GenerateOmp);
BENCHMARK(BM_ScoreSerial);
BENCHMARK(BM_ScoreOmp);

BENCHMARK_MAIN();
