#include "mecsched/optim.hpp"

#include <cmath>

#include "mecsched/parallel.hpp"

namespace mecsched {

Adam::Adam(std::size_t parameter_count, AdamConfig cfg)
    : cfg_(cfg), m_(parameter_count, 0.0), v_(parameter_count, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    throw ShapeError("optimizer state does not match parameter count");
  }
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(cfg_.beta1, t);
  const double c2 = 1.0 - std::pow(cfg_.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
    const double m_hat = m_[i] / c1;
    const double v_hat = v_[i] / c2;
    params[i] -= cfg_.learning_rate * m_hat / (std::sqrt(v_hat) + cfg_.epsilon);
  }
}

StepResult train_step(Network& net, const TrainBatch& batch, LossKind kind, Adam& optimizer,
                      std::size_t workers, std::uint64_t dropout_seed) {
  const std::size_t n = batch.inputs.size();
  if (batch.targets.size() != n || batch.masks.size() != n) {
    throw ShapeError("batch inputs, targets and masks differ in count");
  }
  const std::size_t p = net.parameter_count();
  std::vector<std::vector<double>> grads(n);
  std::vector<double> sums(n, 0.0);
  std::vector<std::size_t> counts(n, 0);

  const double dropout = net.config().dropout;
  parallel_for(n, workers, [&](std::size_t i) {
    Rng rng = make_rng(dropout_seed ^ mix_seed(i));
    const ForwardMode mode{dropout, dropout > 0.0 ? &rng : nullptr};
    Sequential::Trace trace;
    const Mat out = net.forward(batch.inputs[i], trace, mode);
    LossValue l = loss_sum(kind, out, batch.targets[i], batch.masks[i]);
    sums[i] = l.value;
    counts[i] = l.count;
    grads[i].assign(p, 0.0);
    if (l.count > 0) net.backward(trace, l.gradient, grads[i]);
  });

  StepResult result;
  std::vector<double> total(p, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    result.loss += sums[i];
    result.count += counts[i];
    for (std::size_t k = 0; k < p; ++k) total[k] += grads[i][k];
  }
  if (result.count == 0) return result;
  const double scale = 1.0 / static_cast<double>(result.count);
  for (double& g : total) g *= scale;
  result.loss *= scale;
  optimizer.step(net.parameters().values(), total);
  return result;
}

}  // namespace mecsched
