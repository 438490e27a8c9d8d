#include <doctest.h>

#include "mecsched/datagen.hpp"
#include "mecsched/ga.hpp"

using namespace mecsched;

namespace {

Instance random_instance(std::size_t n, std::uint64_t seed) {
  return sample_instance(InstanceDistribution{}, n, seed, SystemParams{});
}

bool same(const LabeledInstance& a, const LabeledInstance& b) {
  return a.schedule.m == b.schedule.m && a.schedule.p_ul == b.schedule.p_ul &&
         a.schedule.p_dl == b.schedule.p_dl && a.schedule.f_ap == b.schedule.f_ap &&
         a.utility == b.utility && a.solver_tag == b.solver_tag;
}

}  // namespace

TEST_CASE("config validation") {
  GaConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.population_size = 3;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);  // needs elitism + 2
  cfg = GaConfig{};
  cfg.crossover_rate = 1.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = GaConfig{};
  cfg.mutation_rate = -0.1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  CHECK(GaConfig{}.mutation_rate_for(8) == doctest::Approx(0.125));
}

TEST_CASE("small instances reach the enumerated optimum") {
  const SystemParams p;
  GaConfig cfg;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Instance inst = random_instance(4, 900 + seed);
    cfg.seed = seed;
    const LabeledInstance ga = ga_solve(inst, p, cfg);
    const ResourceSolution best = enumerate_optimal(inst, p);
    CHECK(ga.utility == doctest::Approx(best.utility).epsilon(1e-6));
    CHECK(ga.solver_tag == "ga");
    CHECK(check_constraints(ga.schedule, p).feasible);
    CHECK(evaluate(inst, ga.schedule, p).U == doctest::Approx(ga.utility).epsilon(1e-12));
  }
}

TEST_CASE("frozen population returns its own evaluation") {
  const SystemParams p;
  const Instance inst = random_instance(6, 4);
  GaConfig cfg;
  cfg.population_size = 10;
  cfg.generations = 15;
  cfg.mutation_rate = 0.0;
  const std::vector<std::uint8_t> chrom{1, 0, 1, 1, 0, 0};
  cfg.initial_population = {chrom};
  const LabeledInstance r = ga_solve(inst, p, cfg);
  CHECK(r.schedule.m == chrom);
  CHECK(r.utility == solve_resources_given_m(inst, chrom, p).utility);
}

TEST_CASE("determinism and incumbent monotonicity") {
  const SystemParams p;
  const Instance inst = random_instance(12, 8);
  GaConfig cfg;
  cfg.generations = 40;
  cfg.seed = 99;
  GaTrace t1, t2;
  const LabeledInstance a = ga_solve(inst, p, cfg, &t1);
  const LabeledInstance b = ga_solve(inst, p, cfg, &t2);
  CHECK(same(a, b));
  CHECK(t1.best_utility == t2.best_utility);
  REQUIRE(t1.best_utility.size() == cfg.generations + 1);
  for (std::size_t g = 1; g < t1.best_utility.size(); ++g) {
    CHECK(t1.best_utility[g] <= t1.best_utility[g - 1]);
  }
  CHECK(t1.best_utility.back() == a.utility);
  CHECK(t1.distinct_evaluations > 0);
}

TEST_CASE("batch is independent of the worker count") {
  const SystemParams p;
  std::vector<Instance> instances;
  for (std::uint64_t s = 0; s < 12; ++s) instances.push_back(random_instance(8, 40 + s));
  GaConfig cfg;
  cfg.generations = 30;
  cfg.seed = 5;
  const auto one = ga_solve_batch(instances, p, cfg, 1);
  const auto four = ga_solve_batch(instances, p, cfg, 4);
  REQUIRE(one.size() == instances.size());
  for (std::size_t i = 0; i < one.size(); ++i) {
    CHECK(same(one[i], four[i]));
    GaConfig single = cfg;
    single.seed = cfg.seed ^ i;
    CHECK(same(one[i], ga_solve(instances[i], p, single)));
  }
  CHECK(ga_solve_batch({}, p, cfg, 4).empty());
}

TEST_CASE("batch errors carry the instance index") {
  SystemParams p;
  p.f_total = 0.5e9;  // below a single f_ap_min, so every offload is infeasible
  std::vector<Instance> instances{random_instance(3, 1), random_instance(3, 2)};
  // All-local is always feasible, so the GA still succeeds here.
  CHECK_NOTHROW(ga_solve_batch(instances, p, GaConfig{}, 2));
  instances[1].tasks[0].c = -1.0;
  try {
    ga_solve_batch(instances, p, GaConfig{}, 2);
    FAIL("expected a batch error");
  } catch (const BatchError& e) {
    CHECK(e.index() == 1);
  }
}

TEST_CASE("capped generations do not do better on larger instances") {
  const SystemParams p;
  GaConfig cfg;
  cfg.generations = 30;
  auto mean_gap = [&](std::size_t n) {
    double sum = 0.0;
    for (std::size_t i = 0; i < 50; ++i) {
      const Instance inst = random_instance(n, 7000 + 100 * n + i);
      cfg.seed = i;
      const double best = enumerate_optimal(inst, p).utility;
      sum += (ga_solve(inst, p, cfg).utility - best) / best;
    }
    return sum / 50.0;
  };
  const double g6 = mean_gap(6), g16 = mean_gap(16);
  CHECK(g6 >= 0.0);
  CHECK(g16 >= g6);
}
