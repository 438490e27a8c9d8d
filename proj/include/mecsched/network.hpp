#pragma once

// Scheduling sub-networks (OffloadNet / ResourceNet and their MLP and
// MLP-Mixer baselines), losses and finite-difference gradient checking.
//
// Every network has the same three stages:
//   embed  : Linear(4 -> E), GELU, Linear(E -> E) [+ sinusoidal positions]
//   body   : encoder layers | token-wise MLP blocks | mixer blocks, then LayerNorm
//   head   : Linear(E -> E), GELU, Linear(E -> out), Sigmoid
// with out = 1 for offload probabilities and 3 for normalized allocations.

#include <cstdint>
#include <string>

#include "mecsched/layers.hpp"

namespace mecsched {

inline constexpr std::size_t kTaskFeatures = 4;

enum class BodyKind { transformer, mlp, mixer };
enum class HeadKind { offload, resource };

std::string to_string(BodyKind kind);
std::string to_string(HeadKind kind);
BodyKind body_kind_from_string(const std::string& s);
HeadKind head_kind_from_string(const std::string& s);

struct NetConfig {
  std::size_t embed_dim = 32;
  std::size_t encoder_layers = 2;
  std::size_t head_count = 4;
  std::size_t ffn_dim = 64;
  double dropout = 0.0;
  bool positional_encoding = false;
  std::size_t sequence_length = 40;  // padded length; fixed for mixer bodies
  std::uint64_t seed = 0;
  BodyKind body = BodyKind::transformer;
  HeadKind head = HeadKind::offload;

  void validate() const;
  std::size_t output_dim() const { return head == HeadKind::offload ? 1 : 3; }
};

class Network {
 public:
  explicit Network(const NetConfig& cfg);

  const NetConfig& config() const { return cfg_; }
  Sequential& model() { return model_; }
  const Sequential& model() const { return model_; }
  Parameters& parameters() { return model_.parameters(); }
  const Parameters& parameters() const { return model_.parameters(); }
  std::size_t parameter_count() const { return model_.parameters().size(); }

  /// positions x 4 -> positions x output_dim, values in (0, 1).
  Mat forward(const Mat& features) const;
  Mat forward(const Mat& features, Sequential::Trace& trace, const ForwardMode& mode = {}) const;
  void backward(const Sequential::Trace& trace, const Mat& d_output, std::span<double> grad) const;

  /// B x P x 4 -> B x P (offload) or B x P x 3 (resource).
  Tensor forward(const Tensor& batch) const;

 private:
  void check_input(const Mat& features) const;

  NetConfig cfg_;
  Sequential model_;
};

enum class LossKind { binary_cross_entropy, mean_squared_error };

struct LossValue {
  double value = 0.0;  // sum or mean, see the producing function
  Mat gradient;        // d value / d prediction
  std::size_t count = 0;
};

/// Sum over positions where mask != 0, with its gradient.
LossValue loss_sum(LossKind kind, const Mat& prediction, const Mat& target, const Mat& mask);

/// Mean over positions where mask != 0. Throws std::invalid_argument on an
/// empty mask.
LossValue loss(LossKind kind, const Mat& prediction, const Mat& target, const Mat& mask);
LossValue loss(LossKind kind, const Tensor& prediction, const Tensor& target, const Tensor& mask);

// ------------------------------------------------------------ grad checking

enum class LayerVariant { linear, layer_norm, multi_head_self_attention, feed_forward, mixer_block,
                          encoder_layer, mlp_block };

struct LayerSpec {
  LayerVariant variant = LayerVariant::linear;
  Eigen::Index input_dim = 8;
  Eigen::Index output_dim = 8;  // linear only
  Eigen::Index hidden_dim = 16;
  Eigen::Index head_count = 2;
  Eigen::Index tokens = 6;      // mixer only

  void validate() const;
};

/// A single-layer model for testing one variant in isolation.
Sequential make_layer_model(const LayerSpec& spec, std::uint64_t seed);

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;
};

/// Central finite differences of L = sum(w * model(input)) for a fixed
/// random w, on up to `coordinates` parameter entries (all when fewer).
/// Relative error is |a - n| / max(|a|, |n|, 1e-6 * max(1, |L|)).
GradCheckResult grad_check(Sequential& model, const Mat& input, double epsilon = 1e-5,
                           std::size_t coordinates = 200, std::uint64_t seed = 0);

}  // namespace mecsched
