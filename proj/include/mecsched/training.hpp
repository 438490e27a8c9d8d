#pragma once

// Supervised training of the sub-networks on GA-labeled datasets.
//
// OffloadNet learns the label decisions with BCE over real positions.
// ResourceNet sees the features coupled with the label decisions (teacher
// forcing) and learns normalized box coordinates with MSE over offloaded
// positions.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "mecsched/datagen.hpp"
#include "mecsched/extender.hpp"
#include "mecsched/network.hpp"

namespace mecsched {

/// Non-finite training loss.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainingConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  double validation_fraction = 0.1;
  bool shift_augmentation = false;  // random circular shift per sample and epoch
  std::uint64_t seed = 0;

  void validate() const;
};

struct Sample {
  Mat input;   // n_bar x 4
  Mat target;  // n_bar x out
  Mat mask;    // n_bar x out
};

Sample make_offload_sample(const LabeledInstance& record, const Normalizer& normalizer,
                           const ExtenderConfig& ext);
/// Couples with record.schedule.m, never with a prediction.
Sample make_resource_sample(const LabeledInstance& record, const Normalizer& normalizer,
                            const ExtenderConfig& ext, const SystemParams& params);

std::vector<Sample> make_samples(HeadKind head, std::span<const LabeledInstance> records,
                                 const Normalizer& normalizer, const ExtenderConfig& ext,
                                 const SystemParams& params);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

/// Seeded permutation; the last round(fraction * count) indices validate.
/// Both parts are returned sorted.
Split split_indices(std::size_t count, double validation_fraction, std::uint64_t seed);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_metric = 0.0;  // accuracy at 0.5 (offload) or MSE (resource)
};

struct Evaluation {
  double loss = 0.0;
  double metric = 0.0;
};

/// Mean masked loss and the head's metric over a sample set.
Evaluation evaluate_samples(const Network& net, std::span<const Sample> samples,
                            std::size_t workers = 1);

/// Throws DivergenceError when a training loss is not finite.
std::vector<EpochRecord> train_network(Network& net, std::span<const Sample> train,
                                       std::span<const Sample> validation,
                                       const TrainingConfig& cfg, std::size_t workers = 1);

}  // namespace mecsched
