#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mecsched/network.hpp"

namespace mecsched {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam(std::size_t parameter_count, AdamConfig cfg);

  void step(std::span<double> params, std::span<const double> grad);
  std::uint64_t steps() const { return steps_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::uint64_t steps_ = 0;
};

struct TrainBatch {
  std::vector<Mat> inputs;
  std::vector<Mat> targets;
  std::vector<Mat> masks;  // 1 where the loss applies
};

struct StepResult {
  double loss = 0.0;  // mean over all masked entries of the batch
  std::size_t count = 0;
};

/// One optimizer step on the batch-mean loss. Per-sample gradients are
/// summed in sample order, so the update does not depend on `workers`.
/// A batch without masked entries leaves the parameters untouched.
StepResult train_step(Network& net, const TrainBatch& batch, LossKind kind, Adam& optimizer,
                      std::size_t workers = 1, std::uint64_t dropout_seed = 0);

}  // namespace mecsched
