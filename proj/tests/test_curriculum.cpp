#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "finforge/core.hpp"
#include "finforge/curriculum.hpp"

using namespace finforge;

namespace {

SampleStats stats(const std::string& id, Stratum s, bool mastery = false) {
  SampleStats st;
  st.task_id = TaskId(id);
  st.stratum = s;
  st.mastery = mastery;
  st.consecutive_perfect = mastery ? 3 : 0;
  return st;
}

std::vector<SampleStats> mixed_pool(int per_stratum, int mastered) {
  std::vector<SampleStats> pool;
  for (int i = 0; i < per_stratum; ++i) {
    pool.push_back(stats("core-" + std::to_string(i), Stratum::core));
    pool.push_back(stats("learn-" + std::to_string(i), Stratum::learning));
    pool.push_back(stats("front-" + std::to_string(i), Stratum::frontier));
  }
  for (int i = 0; i < mastered; ++i) pool.push_back(stats("master-" + std::to_string(i), Stratum::core, true));
  return pool;
}

std::vector<double> rewards(int successes, int k) {
  std::vector<double> r(static_cast<std::size_t>(k), 0.0);
  for (int i = 0; i < successes; ++i) r[static_cast<std::size_t>(i)] = 1.0;
  return r;
}

}  // namespace

TEST_CASE("estimate_difficulty") {
  const CurriculumConfig cfg;
  const auto all = estimate_difficulty(rewards(10, 10), cfg);
  CHECK(all.pass_rate == 1.0);
  CHECK(all.stratum == Stratum::core);
  const auto none = estimate_difficulty(rewards(0, 10), cfg);
  CHECK(none.pass_rate == 0.0);
  CHECK(none.stratum == Stratum::frontier);
  const auto four = estimate_difficulty(rewards(4, 10), cfg);
  CHECK(four.pass_rate == doctest::Approx(0.4));
  CHECK(four.stratum == Stratum::learning);
  CHECK_THROWS_AS(estimate_difficulty(rewards(3, 9), cfg), Error);

  // Partial credit below the cutoff is not a success.
  std::vector<double> partial(10, 0.99);
  CHECK(estimate_difficulty(partial, cfg).pass_rate == 0.0);
}

TEST_CASE("stratum is a pure function of rate and thresholds") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 20000; ++i) {
    CurriculumConfig cfg;
    cfg.frontier_threshold = u(rng) * 0.5;
    cfg.core_threshold = cfg.frontier_threshold + 1e-3 + u(rng) * (1.0 - cfg.frontier_threshold - 1e-3);
    const double rate = i % 7 == 0 ? cfg.core_threshold : (i % 11 == 0 ? cfg.frontier_threshold : u(rng));
    const Stratum expected = rate >= cfg.core_threshold       ? Stratum::core
                             : rate <= cfg.frontier_threshold ? Stratum::frontier
                                                              : Stratum::learning;
    CHECK(stratum_for(rate, cfg) == expected);
    CHECK(stratum_for(rate, cfg) == stratum_for(rate, cfg));
  }
}

TEST_CASE("config validation") {
  CurriculumConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.frontier_threshold = 0.9;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.mastery_sample_prob = 1.5;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.k = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);

  SampleStats s = stats("x", Stratum::core, true);
  s.consecutive_perfect = 1;
  CHECK_THROWS_AS(s.validate(CurriculumConfig{}), Error);
  s = stats("y", Stratum::core);
  s.pass_history.push_back({10, 11, "t"});
  CHECK_THROWS_AS(s.validate(CurriculumConfig{}), Error);
}

TEST_CASE("record_rollouts appends a measurement and restratifies") {
  const CurriculumConfig cfg;
  SampleStats s = stats("t", Stratum::learning);
  CHECK_FALSE(s.pass_rate().has_value());
  record_rollouts(s, rewards(9, 10), cfg, "t1");
  REQUIRE(s.pass_history.size() == 1);
  CHECK(s.pass_history[0] == PassMeasurement{10, 9, "t1"});
  CHECK(s.pass_rate() == std::optional<double>(0.9));
  CHECK(s.stratum == Stratum::core);
  record_rollouts(s, rewards(1, 10), cfg, "t2");
  CHECK(s.stratum == Stratum::frontier);
  CHECK(s.pass_history.size() == 2);
}

TEST_CASE("build_batch determinism and composition") {
  const auto pool = mixed_pool(20, 5);
  CurriculumConfig cfg;
  cfg.batch_size = 16;
  const auto a = build_batch(pool, cfg, Stratum::learning, 42);
  const auto b = build_batch(pool, cfg, Stratum::learning, 42);
  CHECK(a == b);
  CHECK(a.entries.size() == 16);
  std::set<TaskId> seen;
  std::size_t counted = 0;
  for (const auto& e : a.entries) {
    CHECK(seen.insert(e.task_id).second);  // no repeats within a batch
  }
  for (const auto& [p, n] : a.composition) counted += n;
  CHECK(counted == a.entries.size());
  CHECK(build_batch(pool, cfg, Stratum::learning, 43) != a);
  CHECK_THROWS_AS(build_batch({}, cfg, Stratum::core, 1), Error);
}

TEST_CASE("build_batch falls through empty pools") {
  std::vector<SampleStats> pool;
  for (int i = 0; i < 30; ++i) pool.push_back(stats("f" + std::to_string(i), Stratum::frontier));
  CurriculumConfig cfg;
  cfg.batch_size = 10;
  const auto b = build_batch(pool, cfg, Stratum::frontier, 7);
  CHECK(b.entries.size() == 10);
  CHECK(b.composition.at(Pool::frontier) == 10);
  CHECK_FALSE(b.notes.empty());  // learning slots fell through
  bool noted = false;
  for (const auto& n : b.notes) noted = noted || n.find("learning pool empty") != std::string::npos;
  CHECK(noted);

  // A pool smaller than the batch yields a short batch with a note.
  const std::vector<SampleStats> tiny{stats("a", Stratum::learning), stats("b", Stratum::core)};
  const auto t = build_batch(tiny, cfg, Stratum::core, 1);
  CHECK(t.entries.size() == 2);
  CHECK(t.notes.back().find("exhausted") != std::string::npos);
}

TEST_CASE("mastery sampling law") {
  const auto pool = mixed_pool(5, 5);
  CurriculumConfig cfg;
  cfg.batch_size = 1;
  const int n = 10000;
  int mastery = 0;
  int learning = 0;
  for (int seed = 0; seed < n; ++seed) {
    const auto b = build_batch(pool, cfg, Stratum::learning, static_cast<std::uint64_t>(seed));
    REQUIRE(b.entries.size() == 1);
    if (b.entries[0].source == Pool::mastery) ++mastery;
    if (b.entries[0].source == Pool::learning) ++learning;
  }
  const double p = cfg.mastery_sample_prob;
  const double freq = static_cast<double>(mastery) / n;
  const double sigma = std::sqrt(p * (1 - p) / n);
  CHECK(std::fabs(freq - p) <= 3 * sigma);
  CHECK(std::fabs(freq - 0.2) <= 0.02);
  // Non-mastery slots go to learning with probability learning_share.
  const int rest = n - mastery;
  const double lf = static_cast<double>(learning) / rest;
  CHECK(std::fabs(lf - cfg.learning_share) <= 3 * std::sqrt(0.8 * 0.2 / rest));

  // Without mastered tasks no slot is spent on mastery.
  const auto plain = mixed_pool(5, 0);
  for (int seed = 0; seed < 500; ++seed) {
    CHECK(build_batch(plain, cfg, Stratum::learning, static_cast<std::uint64_t>(seed)).entries[0].source !=
          Pool::mastery);
  }
}

TEST_CASE("prune_zero_variance examples") {
  CHECK(classify_rewards(std::vector<double>{1, 1, 1, 1}) == PruneReason::zero_variance_saturated);
  CHECK(classify_rewards(std::vector<double>{0, 0, 0}) == PruneReason::zero_variance_impossible);
  CHECK_FALSE(classify_rewards(std::vector<double>{1, 0, 1}).has_value());
  CHECK(classify_rewards(std::vector<double>{0.5, 0.5}) == PruneReason::zero_variance_saturated);

  Batch b;
  b.entries = {{TaskId("a"), {1, 1, 1, 1}, Pool::core},
               {TaskId("b"), {0, 0, 0}, Pool::frontier},
               {TaskId("c"), {1, 0, 1}, Pool::learning}};
  const auto p = prune_zero_variance(b);
  REQUIRE(p.entries.size() == 1);
  CHECK(p.entries[0].task_id == TaskId("c"));
  REQUIRE(p.pruned.size() == 2);
  CHECK(p.pruned[0].reason == PruneReason::zero_variance_saturated);
  CHECK(p.pruned[1].reason == PruneReason::zero_variance_impossible);

  Batch short_entry;
  short_entry.entries = {{TaskId("s"), {1}, Pool::core}};
  CHECK_THROWS_AS(prune_zero_variance(short_entry), Error);
}

TEST_CASE("pruning over random reward groups") {
  std::mt19937_64 rng(2024);
  Batch b;
  for (int i = 0; i < 10000; ++i) {
    const int k = 2 + static_cast<int>(rng() % 9);
    std::vector<double> r;
    const int mode = static_cast<int>(rng() % 4);
    for (int j = 0; j < k; ++j) {
      switch (mode) {
        case 0: r.push_back(1.0); break;
        case 1: r.push_back(0.0); break;
        case 2: r.push_back(static_cast<double>(rng() % 2)); break;
        default: r.push_back(static_cast<double>(rng() % 5) / 4.0); break;
      }
    }
    b.entries.push_back({TaskId("g" + std::to_string(i)), r, Pool::learning});
  }
  const std::size_t before = b.entries.size();
  const auto p = prune_zero_variance(b);
  CHECK(p.entries.size() + p.pruned.size() == before);
  std::set<TaskId> kept;
  for (const auto& e : p.entries) {
    CHECK(sample_variance(e.rollout_rewards) > 0.0);
    kept.insert(e.task_id);
  }
  for (const auto& e : p.pruned) {
    CHECK_FALSE(kept.contains(e.task_id));
    CHECK(sample_variance(e.rollout_rewards) == 0.0);
  }
}

TEST_CASE("mastery bookkeeping") {
  const CurriculumConfig cfg;
  std::map<TaskId, SampleStats> st{{TaskId("t"), stats("t", Stratum::core)}};
  const auto perfect = std::vector<TaskOutcome>{{TaskId("t"), rewards(10, 10)}};
  const auto failed = std::vector<TaskOutcome>{{TaskId("t"), rewards(9, 10)}};

  update_mastery(st, perfect, cfg);
  update_mastery(st, perfect, cfg);
  CHECK(st.at(TaskId("t")).consecutive_perfect == 2);
  CHECK_FALSE(st.at(TaskId("t")).mastery);
  update_mastery(st, failed, cfg);
  CHECK(st.at(TaskId("t")).consecutive_perfect == 0);

  for (int i = 0; i < 3; ++i) update_mastery(st, perfect, cfg);
  CHECK(st.at(TaskId("t")).mastery);
  CHECK_NOTHROW(st.at(TaskId("t")).validate(cfg));

  update_mastery(st, failed, cfg);
  CHECK_FALSE(st.at(TaskId("t")).mastery);
  CHECK(st.at(TaskId("t")).stratum == Stratum::learning);
  CHECK(st.at(TaskId("t")).consecutive_perfect == 0);

  const auto unknown = std::vector<TaskOutcome>{{TaskId("nope"), rewards(1, 10)}};
  CHECK_THROWS_AS(update_mastery(st, unknown, cfg), Error);
}

TEST_CASE("stage schedule") {
  const CurriculumConfig cfg;
  std::vector<SampleStats> pool{stats("a", Stratum::core), stats("b", Stratum::core)};
  pool[0].pass_history.push_back({10, 9, "t"});
  pool[1].pass_history.push_back({10, 8, "t"});
  // mean 0.85 > 0.8
  CHECK(next_stage(Stratum::core, pool, cfg) == Stratum::learning);
  pool[1].pass_history.back().successes = 6;
  CHECK(next_stage(Stratum::core, pool, cfg) == Stratum::core);
  CHECK(next_stage(Stratum::learning, pool, cfg) == Stratum::frontier);  // no learning tasks
  CHECK(next_stage(Stratum::frontier, pool, cfg) == Stratum::frontier);
}
