#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mecsched/scheduler.hpp"

using namespace mecsched;

namespace {

Mat random_rows(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uniform01(rng);
  return m;
}

TsNet random_tsnet(bool pe, std::uint64_t seed) {
  NetConfig oc;
  oc.positional_encoding = pe;
  oc.seed = seed;
  NetConfig rc = oc;
  rc.head = HeadKind::resource;
  rc.seed = seed + 1;
  std::vector<Instance> corpus;
  for (std::uint64_t s = 0; s < 30; ++s) {
    corpus.push_back(sample_instance(InstanceDistribution{}, 40, 1000 + s, SystemParams{}));
  }
  return TsNet{Network(oc), Network(rc), Normalizer::fit(corpus)};
}

// Pushes the output bias of an offload network so every probability saturates.
void saturate(Network& offload, double bias) {
  const ParamSlot& last = offload.parameters().slots().back();
  auto values = offload.parameters().values();
  for (Eigen::Index i = 0; i < last.rows * last.cols; ++i) values[last.offset + static_cast<std::size_t>(i)] = bias;
}

Instance instance(std::size_t n, std::uint64_t seed) {
  return sample_instance(InstanceDistribution{}, n, seed, SystemParams{});
}

}  // namespace

TEST_CASE("pad, unpad and shift on random inputs") {
  Rng rng = make_rng(1);
  ExtenderConfig ext;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto n = static_cast<Eigen::Index>(uniform_index(rng, 40) + 1);
    const Mat x = random_rows(n, 4, rng);
    const PaddedFeatures p = pad(x, ext);
    REQUIRE(p.features.rows() == 40);
    CHECK(p.real_count() == static_cast<std::size_t>(n));
    CHECK(p.features.topRows(n) == x);
    if (n < 40) CHECK((p.features.bottomRows(40 - n).array() == -1.0).all());
    CHECK(unpad(p.features, p.mask) == x);

    const std::size_t a = uniform_index(rng, 40), b = uniform_index(rng, 40);
    const Mat s = shift(p.features, a);
    for (Eigen::Index i = 0; i < 40; ++i) {
      CHECK(s.row((i + static_cast<Eigen::Index>(a)) % 40) == p.features.row(i));
    }
    CHECK(inverse_shift(s, a) == p.features);
    CHECK(shift(s, b) == shift(p.features, (a + b) % 40));
  }
}

TEST_CASE("pad modes and errors") {
  ExtenderConfig ext;
  const Mat x = Mat::Constant(3, 4, 0.5);
  ext.pad_mode = PadMode::zero;
  CHECK(pad(x, ext).features.bottomRows(37).isZero());
  ext.pad_mode = PadMode::random;
  ext.random_seed = 8;
  const Mat r = pad(x, ext).features.bottomRows(37);
  CHECK(r.minCoeff() >= 0.0);
  CHECK(r.maxCoeff() < 1.0);
  CHECK(pad(x, ext).features == pad(x, ext).features);
  CHECK(pad_mode_from_string(to_string(PadMode::random)) == PadMode::random);
  CHECK_THROWS_AS(pad_mode_from_string("mirror"), std::invalid_argument);

  CHECK_THROWS_AS(pad(Mat::Zero(41, 4), ExtenderConfig{}), std::invalid_argument);
  const std::vector<std::uint8_t> short_mask(39, 1);
  CHECK_THROWS_AS(unpad(Mat::Zero(40, 1), short_mask), ShapeError);
  CHECK_THROWS_AS(shift(Mat::Zero(40, 4), 40), std::invalid_argument);
  CHECK(shift(Mat::Zero(1, 4), 0) == Mat::Zero(1, 4));
}

TEST_CASE("shift offsets") {
  SacConfig cfg;
  const auto even = shift_offsets(cfg, 40);
  REQUIRE(even.size() == 20);
  for (std::size_t i = 0; i < 20; ++i) CHECK(even[i] == 2 * i);
  cfg.k = 3;
  CHECK(shift_offsets(cfg, 40) == std::vector<std::size_t>{0, 13, 26});
  cfg.unit_shifts = true;
  CHECK(shift_offsets(cfg, 40) == std::vector<std::size_t>{0, 1, 2});
  cfg.k = 41;
  CHECK_THROWS_AS(shift_offsets(cfg, 40), std::invalid_argument);
  cfg.k = 1;
  cfg.sigma = 1.0;
  CHECK_THROWS_AS(cfg.validate(40), std::invalid_argument);
}

TEST_CASE("threshold is monotone in sigma") {
  Rng rng = make_rng(2);
  std::vector<double> p(200);
  for (double& v : p) v = uniform01(rng);
  p[0] = 0.3;
  CHECK(threshold(p, 0.3)[0] == 1);  // inclusive at the threshold
  std::vector<std::uint8_t> prev(p.size(), 1);
  for (double sigma = 0.05; sigma < 1.0; sigma += 0.05) {
    const auto m = threshold(p, sigma);
    for (std::size_t i = 0; i < p.size(); ++i) {
      CHECK(m[i] <= prev[i]);
      CHECK(m[i] == (p[i] >= sigma ? 1 : 0));
    }
    prev = m;
  }
}

TEST_CASE("coupling and allocation mapping") {
  Rng rng = make_rng(3);
  const PaddedFeatures p = pad(random_rows(5, 4, rng), ExtenderConfig{});
  const std::vector<std::uint8_t> m{1, 0, 1, 0, 0};
  const Mat c = couple(p.features, p.mask, m);
  CHECK(c.row(0) == p.features.row(0));
  CHECK(c.row(1).isZero());
  CHECK(c.row(2) == p.features.row(2));
  CHECK(c.bottomRows(35) == p.features.bottomRows(35));

  const SystemParams params;
  Mat unit = random_rows(5, 3, rng);
  unit(0, 0) = 0.0;
  unit(0, 2) = 1.0;
  const Schedule s = allocation_from_unit(unit, m, params);
  CHECK(s.p_ul[0] == params.p_ul_min);
  CHECK(s.f_ap[0] == params.f_ap_max);
  CHECK(s.p_ul[1] == 0.0);
  CHECK(s.f_ap[3] == 0.0);
  const Mat back = unit_from_allocation(s, params);
  for (Eigen::Index r : {0, 2}) {
    for (Eigen::Index k = 0; k < 3; ++k) CHECK(back(r, k) == doctest::Approx(unit(r, k)).epsilon(1e-12));
  }
  CHECK(back.row(1).isZero());
  CHECK_THROWS_AS(allocation_from_unit(Mat::Zero(4, 3), m, params), ShapeError);
}

TEST_CASE("shift-and-choose") {
  const SystemParams params;
  const ExtenderConfig ext;
  const TsNet nets = random_tsnet(true, 11);

  SUBCASE("never worse than a single pass and picks the best candidate") {
    SacConfig sac;
    sac.sigma = 0.5;
    for (std::uint64_t seed = 0; seed < 15; ++seed) {
      const Instance inst = instance(5 + 2 * seed, seed);
      const SacResult many = tsnet_sac_schedule(nets, inst, params, sac, ext);
      const SacResult one = tsnet_schedule(nets, inst, params, sac.sigma, ext);
      REQUIRE(many.candidates.size() == sac.k);
      CHECK_FALSE(many.fallback);
      CHECK(many.utility <= one.utility);
      CHECK(many.candidates[0].m == one.candidates[0].m);
      CHECK(many.candidates[0].utility == one.utility);
      double best = std::numeric_limits<double>::infinity();
      std::size_t arg = 0;
      for (const Candidate& c : many.candidates) {
        if (c.feasible && c.utility < best) best = c.utility, arg = c.shift_index;
      }
      CHECK(many.utility == best);
      CHECK(many.shift_index == arg);  // first of any tie
      CHECK(check_constraints(many.schedule, params).feasible);
      CHECK(evaluate(inst, many.schedule, params).U == doctest::Approx(many.utility).epsilon(1e-12));
    }
  }
  SUBCASE("without positions every shift sees the same task set") {
    const TsNet plain = random_tsnet(false, 12);
    const Instance inst = instance(17, 4);
    const PaddedFeatures p = prepare_features(inst, plain.normalizer, ext);
    const Mat base = plain.offload.forward(p.features);
    for (std::size_t j : shift_offsets(SacConfig{}, 40)) {
      const Mat back = inverse_shift(plain.offload.forward(shift(p.features, j)), j);
      CHECK((back - base).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  SUBCASE("all-infeasible candidates fall back to local execution") {
    TsNet eager = random_tsnet(true, 13);
    saturate(eager.offload, 50.0);
    SystemParams tight = params;
    tight.f_total = 3e9;  // five offloaded tasks need at least 5e9
    const Instance inst = instance(5, 6);
    const SacResult r = tsnet_sac_schedule(eager, inst, tight, SacConfig{}, ext);
    CHECK(r.fallback);
    CHECK(r.schedule.m == std::vector<std::uint8_t>(5, 0));
    CHECK(r.utility == evaluate(inst, Schedule::all_local(5), tight).U);
    for (const Candidate& c : r.candidates) CHECK_FALSE(c.feasible);
  }
  SUBCASE("no offloads skips the resource network") {
    TsNet shy = random_tsnet(true, 14);
    saturate(shy.offload, -50.0);
    const Instance inst = instance(9, 7);
    const SacResult r = tsnet_sac_schedule(shy, inst, params, SacConfig{}, ext);
    CHECK_FALSE(r.fallback);
    CHECK(r.utility == evaluate(inst, Schedule::all_local(9), params).U);
  }
}

TEST_CASE("all-offload baseline") {
  const SystemParams p;
  const Schedule s = all_offload_schedule(instance(3, 1), p);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(s.m[i] == 1);
    CHECK(s.p_ul[i] == doctest::Approx(0.125));
    CHECK(s.p_dl[i] == doctest::Approx(110.0));
    CHECK(s.f_ap[i] == doctest::Approx(4.5e9));
  }
  // Forty midpoints exceed the budget and are scaled down evenly.
  const Schedule full = all_offload_schedule(instance(40, 1), p);
  CHECK(check_constraints(full, p).feasible);
  for (double f : full.f_ap) CHECK(f == doctest::Approx(3.5e9));
}

TEST_CASE("method names and dispatch") {
  for (const std::string& name : method_names()) CHECK(to_string(method_from_string(name)) == name);
  CHECK(method_names().size() == 8);
  try {
    method_from_string("simulated-annealing");
    FAIL("expected an error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("tsnet-sac") != std::string::npos);
  }

  const SystemParams p;
  SchedulerContext ctx;
  ctx.ga.generations = 10;
  const Instance inst = instance(6, 3);
  CHECK(run_method(Method::all_local, inst, p, ctx).schedule.m == std::vector<std::uint8_t>(6, 0));
  CHECK(check_constraints(run_method(Method::ga, inst, p, ctx).schedule, p).feasible);
  CHECK(evaluate(inst, run_method(Method::oracle, inst, p, ctx).schedule, p).U ==
        doctest::Approx(enumerate_optimal(inst, p).utility));
  CHECK_THROWS_AS(run_method(Method::tsnet_sac, inst, p, ctx), std::invalid_argument);
  CHECK_THROWS_AS(run_method(Method::mlp_mixer, inst, p, ctx), std::invalid_argument);
  CHECK_THROWS_AS(run_method(Method::oracle, instance(17, 3), p, ctx), TooLargeError);

  const TsNet nets = random_tsnet(true, 21);
  ctx.tsnet = &nets;
  const MethodResult r = run_method(Method::tsnet_sac, inst, p, ctx);
  CHECK(r.schedule.m == tsnet_sac_schedule(nets, inst, p, ctx.sac, ctx.extender).schedule.m);
}
