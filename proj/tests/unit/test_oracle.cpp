#include <doctest.h>

#include <cmath>
#include <limits>

#include "mecsched/datagen.hpp"
#include "mecsched/oracle.hpp"
#include "mecsched/random.hpp"

using namespace mecsched;

namespace {

// Dense 1-D grid minimum of g over [lo, hi], then a finer grid around the
// best cell. Independent of the solver's grid + golden-section search.
template <class G>
double grid_min(G&& g, double lo, double hi, int points = 4001) {
  double best = std::numeric_limits<double>::infinity();
  double arg = lo;
  for (int i = 0; i < points; ++i) {
    const double x = lo + (hi - lo) * i / (points - 1);
    const double v = g(x);
    if (v < best) best = v, arg = x;
  }
  const double step = (hi - lo) / (points - 1);
  const double a = std::max(lo, arg - step), b = std::min(hi, arg + step);
  for (int i = 0; i < points; ++i) {
    const double x = a + (b - a) * i / (points - 1);
    best = std::min(best, g(x));
  }
  return best;
}

double rate(double p, double h, double w, const SystemParams& s) {
  return w * std::log2(1.0 + p * h / (s.n0 * w));
}

// Best utility of an instance for fixed m with a non-binding budget: each
// offloaded task splits into three independent 1-D problems.
double brute_force_given_m(const Instance& inst, const std::vector<std::uint8_t>& m,
                           const SystemParams& s) {
  const double n = static_cast<double>(inst.size());
  const double wd = s.lambda / n, we = 1.0 - s.lambda;
  double total = 0.0;
  for (std::size_t i = 0; i < inst.size(); ++i) {
    const TaskInfo& t = inst.tasks[i];
    if (!m[i]) {
      total += wd * t.c / s.f_loc + we * s.k_loc * s.f_loc * s.f_loc * t.c;
      continue;
    }
    total += grid_min([&](double p) { return t.u * (wd + we * p) / rate(p, t.h_ul, s.w_ul, s); },
                      s.p_ul_min, s.p_ul_max);
    total += grid_min([&](double p) { return t.d * (wd + we * p) / rate(p, t.h_dl, s.w_dl, s); },
                      s.p_dl_min, s.p_dl_max);
    total += grid_min([&](double f) { return wd * t.c / f + we * s.k_ap * f * f * t.c; },
                      s.f_ap_min, s.f_ap_max);
  }
  return total;
}

Instance random_instance(std::size_t n, std::uint64_t seed) {
  InstanceDistribution dist;
  return sample_instance(dist, n, seed, SystemParams{});
}

}  // namespace

TEST_CASE("all local needs no continuous solve") {
  const SystemParams p;
  const Instance inst = random_instance(5, 3);
  const std::vector<std::uint8_t> m(5, 0);
  const ResourceSolution r = solve_resources_given_m(inst, m, p);
  CHECK(r.utility == doctest::Approx(evaluate(inst, Schedule::all_local(5), p).U).epsilon(1e-12));
  for (double f : r.schedule.f_ap) CHECK(f == 0.0);
}

TEST_CASE("single offloaded task uses the stationary frequency") {
  SystemParams p;
  const Instance inst{{TaskInfo::reciprocal(1e5, 1e9, 1e6, 1e-11)}};
  const ObjectiveWeights w = ObjectiveWeights::for_instance(1, p);
  const double fstar = std::cbrt(p.lambda / (2.0 * 1.0 * (1.0 - p.lambda) * p.k_ap));
  const double expect = std::clamp(fstar, p.f_ap_min, p.f_ap_max);
  CHECK(optimal_frequency(1e9, 0.0, w, p) == doctest::Approx(expect).epsilon(1e-12));
  const ResourceSolution r = solve_resources_given_m(inst, std::vector<std::uint8_t>{1}, p);
  CHECK(r.schedule.f_ap[0] == doctest::Approx(expect).epsilon(1e-12));

  SUBCASE("stationary point inside the box when delay matters more") {
    SystemParams q = p;
    q.lambda = 0.99;
    const double f = std::cbrt(q.lambda / (2.0 * (1.0 - q.lambda) * q.k_ap));
    REQUIRE(f > q.f_ap_min);
    REQUIRE(f < q.f_ap_max);
    CHECK(optimal_frequency(1e9, 0.0, ObjectiveWeights::for_instance(1, q), q) ==
          doctest::Approx(f).epsilon(1e-9));
  }
}

TEST_CASE("link power against a dense grid") {
  const SystemParams p;
  const ObjectiveWeights w = ObjectiveWeights::for_instance(4, p);
  for (double h : {1e-13, 1e-12, 1e-11, 1e-10}) {
    for (double bits : {1e5, 1e7}) {
      const PowerChoice c = optimize_link_power(bits, h, p.w_ul, p.p_ul_min, p.p_ul_max, w, p, {});
      const double ref = grid_min(
          [&](double q) { return bits * (w.delay + w.energy * q) / rate(q, h, p.w_ul, p); },
          p.p_ul_min, p.p_ul_max);
      CHECK(c.cost <= ref * (1 + 1e-9));
      CHECK(c.cost >= ref * (1 - 1e-6));
      CHECK(c.power >= p.p_ul_min);
      CHECK(c.power <= p.p_ul_max);
    }
  }
}

TEST_CASE("N = 3 matches a per-variable dense grid") {
  const SystemParams p;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const Instance inst = random_instance(3, 100 + seed);
    for (int mask = 0; mask < 8; ++mask) {
      const std::vector<std::uint8_t> m{static_cast<std::uint8_t>(mask & 1),
                                        static_cast<std::uint8_t>((mask >> 1) & 1),
                                        static_cast<std::uint8_t>((mask >> 2) & 1)};
      const ResourceSolution r = solve_resources_given_m(inst, m, p);
      const double ref = brute_force_given_m(inst, m, p);
      CHECK(r.utility <= ref * (1 + 1e-9));
      CHECK(r.utility >= ref * (1 - 1e-6));
      CHECK(check_constraints(r.schedule, p).feasible);
      CHECK(evaluate(inst, r.schedule, p).U == doctest::Approx(r.utility).epsilon(1e-12));
    }
  }
}

TEST_CASE("frequency budget") {
  SystemParams p;
  p.f_total = 12e9;
  p.lambda = 0.999;  // large unconstrained frequencies so the budget binds
  const std::vector<double> cycles{2e8, 5e8, 1e9, 1.5e9, 2e9, 3e8};
  const ObjectiveWeights w = ObjectiveWeights::for_instance(cycles.size(), p);

  SUBCASE("total is non-increasing in the multiplier") {
    double prev = std::numeric_limits<double>::infinity();
    for (double mu = 0.0; mu < 1e-9; mu += 1e-12) {
      const double t = total_frequency(cycles, mu, w, p);
      CHECK(t <= prev);
      prev = t;
    }
  }
  SUBCASE("allocation spends the budget and has equal marginals") {
    REQUIRE(total_frequency(cycles, 0.0, w, p) > p.f_total);
    const auto f = allocate_frequencies(cycles, w, p, {});
    double sum = 0.0;
    for (double v : f) sum += v;
    CHECK(sum <= p.f_total * (1 + 1e-9));
    CHECK(sum >= p.f_total * (1 - 1e-6));
    // Moving a little frequency between two tasks must not help.
    auto cost = [&](const std::vector<double>& g) {
      double c = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        c += w.delay * cycles[i] / g[i] + w.energy * p.k_ap * g[i] * g[i] * cycles[i];
      }
      return c;
    };
    const double base = cost(f);
    for (std::size_t i = 0; i < f.size(); ++i) {
      for (std::size_t j = 0; j < f.size(); ++j) {
        if (i == j) continue;
        auto g = f;
        const double delta = 1e6;
        g[i] += delta;
        g[j] -= delta;
        if (g[i] > p.f_ap_max || g[j] < p.f_ap_min) continue;
        CHECK(cost(g) >= base * (1 - 1e-12));
      }
    }
  }
  SUBCASE("floor above budget") {
    SystemParams q = p;
    q.f_total = 5e9;
    CHECK_THROWS_AS(allocate_frequencies(cycles, w, q, {}), InfeasibleError);
  }
}

TEST_CASE("enumeration") {
  const SystemParams p;
  SUBCASE("negligible compute stays local") {
    const Instance inst{{TaskInfo::reciprocal(5e5, 1e6, 1e6, 1e-11)}};
    const ResourceSolution r = enumerate_optimal(inst, p);
    CHECK(r.schedule.m == std::vector<std::uint8_t>{0});
    const double offload = solve_resources_given_m(inst, std::vector<std::uint8_t>{1}, p).utility;
    CHECK(r.utility < offload);
  }
  SUBCASE("duplicate tasks decide together") {
    for (double h : {1e-13, 1e-12, 1e-11, 1e-10}) {
      const TaskInfo t = TaskInfo::reciprocal(3e5, 1.5e9, 2e6, h);
      const ResourceSolution r = enumerate_optimal(Instance{{t, t}}, p);
      CHECK(r.schedule.m[0] == r.schedule.m[1]);
    }
  }
  SUBCASE("optimum beats random feasible schedules") {
    Rng rng = make_rng(11);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Instance inst = random_instance(8, 500 + seed);
      const ResourceSolution best = enumerate_optimal(inst, p);
      CHECK(check_constraints(best.schedule, p).feasible);
      for (int trial = 0; trial < 200; ++trial) {
        Schedule s = Schedule::all_local(8);
        for (std::size_t i = 0; i < 8; ++i) {
          if (uniform01(rng) < 0.5) continue;
          s.m[i] = 1;
          s.p_ul[i] = uniform(rng, p.p_ul_min, p.p_ul_max);
          s.p_dl[i] = uniform(rng, p.p_dl_min, p.p_dl_max);
          s.f_ap[i] = uniform(rng, p.f_ap_min, p.f_ap_max);
        }
        CHECK(best.utility <= evaluate(inst, s, p).U * (1 + 1e-6));
      }
    }
  }
  SUBCASE("task order only permutes the answer") {
    const Instance inst = random_instance(6, 77);
    Instance rev = inst;
    std::reverse(rev.tasks.begin(), rev.tasks.end());
    const ResourceSolution a = solve_resources_given_m(inst, std::vector<std::uint8_t>(6, 1), p);
    const ResourceSolution b = solve_resources_given_m(rev, std::vector<std::uint8_t>(6, 1), p);
    CHECK(a.utility == doctest::Approx(b.utility).epsilon(1e-12));
    for (std::size_t i = 0; i < 6; ++i) {
      CHECK(a.schedule.f_ap[i] == doctest::Approx(b.schedule.f_ap[5 - i]).epsilon(1e-9));
      CHECK(a.schedule.p_ul[i] == doctest::Approx(b.schedule.p_ul[5 - i]).epsilon(1e-9));
    }
  }
  SUBCASE("size guard") {
    CHECK_THROWS_AS(enumerate_optimal(random_instance(17, 1), p), TooLargeError);
    CHECK_NOTHROW(enumerate_optimal(random_instance(12, 1), p));
  }
}
