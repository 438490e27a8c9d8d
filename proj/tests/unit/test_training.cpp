#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "mecsched/checkpoint.hpp"
#include "mecsched/params_io.hpp"
#include "mecsched/scheduler.hpp"
#include "mecsched/training.hpp"

using namespace mecsched;
namespace fs = std::filesystem;

namespace {

std::vector<LabeledInstance> labeled(std::size_t count, std::size_t n) {
  std::vector<Instance> instances;
  for (std::size_t s = 0; s < count; ++s) {
    instances.push_back(sample_instance(InstanceDistribution{}, n, 300 + s, SystemParams{}));
  }
  GaConfig ga;
  ga.generations = 15;
  ga.population_size = 16;
  return ga_solve_batch(instances, SystemParams{}, ga, 1);
}

Normalizer fit(const std::vector<LabeledInstance>& records) {
  std::vector<Instance> corpus;
  for (const auto& r : records) corpus.push_back(r.instance);
  return Normalizer::fit(corpus);
}

NetConfig small(HeadKind head) {
  NetConfig c;
  c.embed_dim = 16;
  c.head_count = 2;
  c.ffn_dim = 24;
  c.encoder_layers = 1;
  c.head = head;
  c.seed = 5;
  return c;
}

}  // namespace

TEST_CASE("training config validation") {
  TrainingConfig c;
  CHECK_NOTHROW(c.validate());
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = TrainingConfig{};
  c.validation_fraction = 1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = TrainingConfig{};
  c.learning_rate = -1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("split") {
  const Split a = split_indices(103, 0.1, 7);
  const Split b = split_indices(103, 0.1, 7);
  CHECK(a.train == b.train);
  CHECK(a.validation == b.validation);
  CHECK(a.validation.size() == 10);
  CHECK(a.train.size() == 93);
  CHECK(std::is_sorted(a.train.begin(), a.train.end()));
  CHECK(std::is_sorted(a.validation.begin(), a.validation.end()));
  std::vector<std::size_t> all = a.train;
  all.insert(all.end(), a.validation.begin(), a.validation.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i] == i);
  CHECK(split_indices(103, 0.1, 8).validation != a.validation);
  CHECK(split_indices(10, 0.0, 1).validation.empty());
  CHECK(split_indices(0, 0.2, 1).train.empty());
}

TEST_CASE("samples") {
  const SystemParams p;
  const ExtenderConfig ext;
  const auto records = labeled(6, 7);
  const Normalizer norm = fit(records);

  SUBCASE("offload targets are the label decisions") {
    for (const auto& r : records) {
      const Sample s = make_offload_sample(r, norm, ext);
      const PaddedFeatures pf = prepare_features(r.instance, norm, ext);
      CHECK(s.input == pf.features);
      REQUIRE(s.target.rows() == 40);
      for (Eigen::Index i = 0; i < 40; ++i) {
        const bool real = i < 7;
        CHECK(s.mask(i, 0) == (real ? 1.0 : 0.0));
        if (real) CHECK(s.target(i, 0) == r.schedule.m[static_cast<std::size_t>(i)]);
      }
    }
  }
  SUBCASE("resource input is coupled with the label decisions") {
    for (const auto& r : records) {
      const Sample s = make_resource_sample(r, norm, ext, p);
      const PaddedFeatures pf = prepare_features(r.instance, norm, ext);
      CHECK(s.input == couple(pf.features, pf.mask, r.schedule.m));
      const Mat unit = unit_from_allocation(r.schedule, p);
      for (Eigen::Index i = 0; i < 7; ++i) {
        const double on = r.schedule.m[static_cast<std::size_t>(i)];
        for (Eigen::Index k = 0; k < 3; ++k) {
          CHECK(s.mask(i, k) == on);
          if (on != 0.0) {
            CHECK(s.target(i, k) == unit(i, k));
            CHECK(s.target(i, k) >= -1e-12);
            CHECK(s.target(i, k) <= 1.0 + 1e-12);
          }
        }
      }
      CHECK(s.mask.bottomRows(33).isZero());
    }
    CHECK(make_samples(HeadKind::resource, records, norm, ext, p).size() == records.size());
  }
}

TEST_CASE("train network") {
  const SystemParams p;
  const ExtenderConfig ext;
  const auto records = labeled(24, 8);
  const Normalizer norm = fit(records);
  const auto samples = make_samples(HeadKind::offload, records, norm, ext, p);
  const std::span<const Sample> train(samples.data(), 20);
  const std::span<const Sample> val(samples.data() + 20, 4);
  TrainingConfig cfg;
  cfg.epochs = 6;
  cfg.batch_size = 8;
  cfg.seed = 3;

  SUBCASE("deterministic across worker counts") {
    Network a(small(HeadKind::offload)), b(small(HeadKind::offload));
    const auto ha = train_network(a, train, val, cfg, 1);
    const auto hb = train_network(b, train, val, cfg, 3);
    REQUIRE(ha.size() == 6);
    for (std::size_t e = 0; e < ha.size(); ++e) {
      CHECK(ha[e].epoch == e + 1);
      CHECK(ha[e].train_loss == hb[e].train_loss);
      CHECK(ha[e].val_metric == hb[e].val_metric);
    }
    CHECK(std::equal(a.parameters().values().begin(), a.parameters().values().end(),
                     b.parameters().values().begin()));
    CHECK(ha.back().train_loss < ha.front().train_loss);
    CHECK(ha.back().val_metric >= 0.0);
    CHECK(ha.back().val_metric <= 1.0);
  }
  SUBCASE("shift augmentation is also deterministic") {
    cfg.shift_augmentation = true;
    Network a(small(HeadKind::offload)), b(small(HeadKind::offload));
    train_network(a, train, val, cfg, 1);
    train_network(b, train, val, cfg, 2);
    CHECK(std::equal(a.parameters().values().begin(), a.parameters().values().end(),
                     b.parameters().values().begin()));
  }
  SUBCASE("non-finite loss raises") {
    std::vector<Sample> bad(train.begin(), train.end());
    bad[0].input(0, 0) = std::numeric_limits<double>::quiet_NaN();
    Network net(small(HeadKind::offload));
    CHECK_THROWS_AS(train_network(net, bad, val, cfg), DivergenceError);
  }
  SUBCASE("metric of a saturated network is the label rate") {
    Network net(small(HeadKind::offload));
    const ParamSlot& last = net.parameters().slots().back();
    net.parameters().values()[last.offset] = 60.0;
    double ones = 0.0, count = 0.0;
    for (const Sample& s : val) {
      for (Eigen::Index i = 0; i < 40; ++i) {
        if (s.mask(i, 0) == 0.0) continue;
        ones += s.target(i, 0);
        count += 1.0;
      }
    }
    CHECK(evaluate_samples(net, val).metric == doctest::Approx(ones / count));
  }
}

TEST_CASE("checkpoint round trip") {
  const auto records = labeled(5, 6);
  Checkpoint ck;
  ck.normalizer = fit(records);
  ck.extender.pad_mode = PadMode::zero;
  NetConfig rc = small(HeadKind::resource);
  rc.positional_encoding = true;
  ck.entries.push_back({Network(small(HeadKind::offload)), {{"epochs", 3}}});
  ck.entries.push_back({Network(rc), {}});
  const fs::path dir = fs::temp_directory_path() / "mecsched_test_training_ckpt";
  fs::remove_all(dir);
  const fs::path file = dir / "nested" / "both.json";
  save_checkpoint(file, ck);
  const Checkpoint back = load_checkpoint(file);

  REQUIRE(back.entries.size() == 2);
  CHECK(back.entries[0].metadata.at("epochs") == 3);
  CHECK(back.normalizer.lo() == ck.normalizer.lo());
  CHECK(back.extender.pad_mode == PadMode::zero);
  CHECK(back.entries[1].network.config().positional_encoding);
  for (std::size_t e = 0; e < 2; ++e) {
    const Mat x = prepare_features(records[e].instance, ck.normalizer, ExtenderConfig{}).features;
    CHECK(back.entries[e].network.forward(x) == ck.entries[e].network.forward(x));
  }

  SUBCASE("errors") {
    CHECK_THROWS_AS(load_checkpoint(dir / "missing.json"), IoError);
    nlohmann::json j = ck.to_json();
    j["version"] = 99;
    CHECK_THROWS_AS(Checkpoint::from_json(j), ConfigError);
    j = ck.to_json();
    j["networks"][0]["parameters"][0]["values"].erase(0);
    CHECK_THROWS_AS(Checkpoint::from_json(j), ConfigError);
    j = ck.to_json();
    j["networks"][0]["config"]["embed_dim"] = 8;
    CHECK_THROWS_AS(Checkpoint::from_json(j), ConfigError);
    {
      std::ofstream out(dir / "garbage.json");
      out << "{oops";
    }
    CHECK_THROWS_AS(load_checkpoint(dir / "garbage.json"), ConfigError);
  }
}
