#include "mecsched/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mecsched/optim.hpp"
#include "mecsched/parallel.hpp"
#include "mecsched/random.hpp"
#include "mecsched/scheduler.hpp"

namespace mecsched {

void TrainingConfig::validate() const {
  if (batch_size == 0) throw std::invalid_argument("training.batch_size must be positive");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("training.learning_rate must be finite and non-negative");
  }
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw std::invalid_argument("training.validation_fraction must lie in [0, 1)");
  }
}

Sample make_offload_sample(const LabeledInstance& record, const Normalizer& normalizer,
                           const ExtenderConfig& ext) {
  const PaddedFeatures padded = prepare_features(record.instance, normalizer, ext);
  Sample s;
  s.input = padded.features;
  s.target = Mat::Zero(padded.features.rows(), 1);
  s.mask = Mat::Zero(padded.features.rows(), 1);
  for (std::size_t i = 0; i < record.schedule.size(); ++i) {
    s.target(static_cast<Eigen::Index>(i), 0) = record.schedule.m[i];
    s.mask(static_cast<Eigen::Index>(i), 0) = 1.0;
  }
  return s;
}

Sample make_resource_sample(const LabeledInstance& record, const Normalizer& normalizer,
                            const ExtenderConfig& ext, const SystemParams& params) {
  const PaddedFeatures padded = prepare_features(record.instance, normalizer, ext);
  const auto& m = record.schedule.m;
  Sample s;
  s.input = couple(padded.features, padded.mask, m);
  s.target = Mat::Zero(padded.features.rows(), 3);
  s.mask = Mat::Zero(padded.features.rows(), 3);
  const Mat unit = unit_from_allocation(record.schedule, params);
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!m[i]) continue;
    const auto r = static_cast<Eigen::Index>(i);
    s.target.row(r) = unit.row(r);
    s.mask.row(r).setOnes();
  }
  return s;
}

std::vector<Sample> make_samples(HeadKind head, std::span<const LabeledInstance> records,
                                 const Normalizer& normalizer, const ExtenderConfig& ext,
                                 const SystemParams& params) {
  std::vector<Sample> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    out.push_back(head == HeadKind::offload ? make_offload_sample(r, normalizer, ext)
                                            : make_resource_sample(r, normalizer, ext, params));
  }
  return out;
}

Split split_indices(std::size_t count, double validation_fraction, std::uint64_t seed) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = make_rng(seed);
  for (std::size_t i = count; i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
  const auto val = static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(count)));
  Split split;
  split.train.assign(order.begin(), order.end() - static_cast<std::ptrdiff_t>(val));
  split.validation.assign(order.end() - static_cast<std::ptrdiff_t>(val), order.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.validation.begin(), split.validation.end());
  return split;
}

namespace {

LossKind loss_for(const Network& net) {
  return net.config().head == HeadKind::offload ? LossKind::binary_cross_entropy
                                                : LossKind::mean_squared_error;
}

Sample shifted(const Sample& s, std::size_t j) {
  return {shift(s.input, j), shift(s.target, j), shift(s.mask, j)};
}

}  // namespace

Evaluation evaluate_samples(const Network& net, std::span<const Sample> samples,
                            std::size_t workers) {
  const LossKind kind = loss_for(net);
  const bool offload = net.config().head == HeadKind::offload;
  std::vector<double> sums(samples.size(), 0.0);
  std::vector<double> hits(samples.size(), 0.0);
  std::vector<std::size_t> counts(samples.size(), 0);
  parallel_for(samples.size(), workers, [&](std::size_t i) {
    const Sample& s = samples[i];
    const Mat out = net.forward(s.input);
    const LossValue l = loss_sum(kind, out, s.target, s.mask);
    sums[i] = l.value;
    counts[i] = l.count;
    if (offload) {
      for (Eigen::Index r = 0; r < out.rows(); ++r) {
        if (s.mask(r, 0) == 0.0) continue;
        if ((out(r, 0) >= 0.5) == (s.target(r, 0) >= 0.5)) hits[i] += 1.0;
      }
    }
  });
  double sum = 0.0;
  double hit = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    sum += sums[i];
    hit += hits[i];
    count += counts[i];
  }
  Evaluation e;
  if (count == 0) return e;
  e.loss = sum / static_cast<double>(count);
  e.metric = offload ? hit / static_cast<double>(count) : e.loss;
  return e;
}

std::vector<EpochRecord> train_network(Network& net, std::span<const Sample> train,
                                       std::span<const Sample> validation,
                                       const TrainingConfig& cfg, std::size_t workers) {
  cfg.validate();
  const LossKind kind = loss_for(net);
  const auto rows = static_cast<std::size_t>(net.config().sequence_length);
  Adam adam(net.parameter_count(), AdamConfig{.learning_rate = cfg.learning_rate});
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<EpochRecord> history;
  std::uint64_t step = 0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng rng = make_rng(mix_seed(cfg.seed) ^ epoch);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
    double loss_total = 0.0;
    std::size_t loss_count = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      TrainBatch batch;
      for (std::size_t b = begin; b < end; ++b) {
        Sample s = train[order[b]];
        if (cfg.shift_augmentation) s = shifted(s, uniform_index(rng, rows));
        batch.inputs.push_back(std::move(s.input));
        batch.targets.push_back(std::move(s.target));
        batch.masks.push_back(std::move(s.mask));
      }
      const StepResult r = train_step(net, batch, kind, adam, workers, mix_seed(cfg.seed ^ ++step));
      if (!std::isfinite(r.loss)) {
        throw DivergenceError("non-finite training loss in epoch " + std::to_string(epoch));
      }
      loss_total += r.loss * static_cast<double>(r.count);
      loss_count += r.count;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_count ? loss_total / static_cast<double>(loss_count) : 0.0;
    const Evaluation v = evaluate_samples(net, validation, workers);
    rec.val_loss = v.loss;
    rec.val_metric = v.metric;
    history.push_back(rec);
  }
  return history;
}

}  // namespace mecsched
