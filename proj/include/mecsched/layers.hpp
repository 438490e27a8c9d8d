#pragma once

// Dense layers with hand-written backward passes.
//
// Layers are stateless apart from the indices of their parameter slots;
// all weights live in a flat Parameters buffer so that the optimizer,
// checkpoints and gradient checks treat a whole model as one vector.
// Activations flow as Mat with one row per position.

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mecsched/random.hpp"
#include "mecsched/tensor.hpp"

namespace mecsched {

struct ParamSlot {
  std::string name;
  Eigen::Index rows;
  Eigen::Index cols;
  std::size_t offset;
};

class Parameters {
 public:
  std::size_t add(std::string name, Eigen::Index rows, Eigen::Index cols);

  Eigen::Map<const Mat> view(std::size_t slot) const;
  Eigen::Map<Mat> view(std::size_t slot);
  /// Same layout applied to a gradient buffer.
  Eigen::Map<Mat> view(std::span<double> buffer, std::size_t slot) const;

  const std::vector<ParamSlot>& slots() const { return slots_; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }

 private:
  std::vector<ParamSlot> slots_;
  std::vector<double> values_;
};

struct LayerCache {
  std::vector<Mat> mats;
  std::vector<LayerCache> children;
};

struct ForwardMode {
  double dropout = 0.0;  // applied only when rng is set
  Rng* rng = nullptr;
};

class Layer {
 public:
  virtual ~Layer() = default;
  virtual Mat forward(const Parameters& p, const Mat& x, LayerCache& cache,
                      const ForwardMode& mode) const = 0;
  /// Accumulates parameter gradients into `grad` and returns dL/dx.
  virtual Mat backward(const Parameters& p, const LayerCache& cache, const Mat& dy,
                       std::span<double> grad) const = 0;
  virtual std::string kind() const = 0;
};

using LayerPtr = std::shared_ptr<const Layer>;

class Linear final : public Layer {
 public:
  Linear(Parameters& p, Rng& rng, std::string name, Eigen::Index in, Eigen::Index out);
  Mat forward(const Parameters& p, const Mat& x, LayerCache& cache,
              const ForwardMode& mode) const override;
  Mat backward(const Parameters& p, const LayerCache& cache, const Mat& dy,
               std::span<double> grad) const override;
  std::string kind() const override { return "linear"; }

 private:
  std::size_t weight_;
  std::size_t bias_;
};

class LayerNorm final : public Layer {
 public:
  LayerNorm(Parameters& p, std::string name, Eigen::Index dim, double eps = 1e-5);
  Mat forward(const Parameters& p, const Mat& x, LayerCache& cache,
              const ForwardMode& mode) const override;
  Mat backward(const Parameters& p, const LayerCache& cache, const Mat& dy,
               std::span<double> grad) const override;
  std::string kind() const override { return "layer-norm"; }

  /// Normalized rows before the affine map (cached by forward).
  static const Mat& normalized(const LayerCache& cache) { return cache.mats[0]; }

 private:
  std::size_t gamma_;
  std::size_t beta_;
  double eps_;
};

/// tanh-approximated GELU.
class Gelu final : public Layer {
 public:
  Mat forward(const Parameters& p, const Mat& x, LayerCache& cache,
              const ForwardMode& mode) const override;
  Mat backward(const Parameters& p, const LayerCache& cache, const Mat& dy,
               std::span<double> grad) const override;
  std::string kind() const override { return "gelu"; }
};

class Sigmoid final : public Layer {
 public:
  Mat forward(const Parameters& p, const Mat& x, LayerCache& cache,
              const ForwardMode& mode) const override;
  Mat backward(const Parameters& p, const LayerCache& cache, const Mat& dy,
               std::span<double> grad) const override;
  std::string kind() const override { return "sigmoid"; }
};

/// Adds a fixed sinusoidal table to the first x.rows() positions.
class PositionalEncoding final : public Layer {
 public:
  PositionalEncoding(Eigen::Index max_len, Eigen::Index dim);
  Mat forward(const Parameters& p, const Mat& x, LayerCache& cache,
              const ForwardMode& mode) const override;
  Mat backward(const Parameters& p, const LayerCache& cache, const Mat& dy,
               std::span<double> grad) const override;
  std::string kind() const override { return "positional-encoding"; }

 private:
  Mat table_;
};

class MultiHeadSelfAttention final : public Layer {
 public:
  MultiHeadSelfAttention(Parameters& p, Rng& rng, std::string name, Eigen::Index dim,
                         Eigen::Index heads);
  Mat forward(const Parameters& p, const Mat& x, LayerCache& cache,
              const ForwardMode& mode) const override;
  Mat backward(const Parameters& p, const LayerCache& cache, const Mat& dy,
               std::span<double> grad) const override;
  std::string kind() const override { return "multi-head-self-attention"; }

  Eigen::Index heads() const { return heads_; }
  /// Row-stochastic attention matrix of head h (cached by forward).
  static const Mat& attention(const LayerCache& cache, Eigen::Index h) {
    return cache.mats[static_cast<std::size_t>(5 + h)];
  }

 private:
  Linear q_, k_, v_, o_;
  Eigen::Index dim_;
  Eigen::Index heads_;
};

/// Linear -> GELU -> Linear.
class FeedForward final : public Layer {
 public:
  FeedForward(Parameters& p, Rng& rng, std::string name, Eigen::Index dim, Eigen::Index hidden);
  FeedForward(Parameters& p, Rng& rng, std::string name, Eigen::Index in, Eigen::Index hidden,
              Eigen::Index out);
  Mat forward(const Parameters& p, const Mat& x, LayerCache& cache,
              const ForwardMode& mode) const override;
  Mat backward(const Parameters& p, const LayerCache& cache, const Mat& dy,
               std::span<double> grad) const override;
  std::string kind() const override { return "feed-forward"; }

 private:
  Linear in_;
  Gelu act_;
  Linear out_;
};

/// Pre-norm transformer encoder layer: x + MHSA(LN(x)), then + FFN(LN(.)).
class EncoderLayer final : public Layer {
 public:
  EncoderLayer(Parameters& p, Rng& rng, std::string name, Eigen::Index dim, Eigen::Index heads,
               Eigen::Index ffn_dim);
  Mat forward(const Parameters& p, const Mat& x, LayerCache& cache,
              const ForwardMode& mode) const override;
  Mat backward(const Parameters& p, const LayerCache& cache, const Mat& dy,
               std::span<double> grad) const override;
  std::string kind() const override { return "encoder-layer"; }

 private:
  LayerNorm ln1_;
  MultiHeadSelfAttention attn_;
  LayerNorm ln2_;
  FeedForward ffn_;
};

/// Token-wise residual MLP block: x + FFN(LN(x)). No cross-position mixing.
class MlpBlock final : public Layer {
 public:
  MlpBlock(Parameters& p, Rng& rng, std::string name, Eigen::Index dim, Eigen::Index hidden);
  Mat forward(const Parameters& p, const Mat& x, LayerCache& cache,
              const ForwardMode& mode) const override;
  Mat backward(const Parameters& p, const LayerCache& cache, const Mat& dy,
               std::span<double> grad) const override;
  std::string kind() const override { return "mlp-block"; }

 private:
  LayerNorm ln_;
  FeedForward ffn_;
};

/// MLP-Mixer block: token-mixing MLP across positions, then channel MLP.
class MixerBlock final : public Layer {
 public:
  MixerBlock(Parameters& p, Rng& rng, std::string name, Eigen::Index tokens, Eigen::Index dim,
             Eigen::Index token_hidden, Eigen::Index channel_hidden);
  Mat forward(const Parameters& p, const Mat& x, LayerCache& cache,
              const ForwardMode& mode) const override;
  Mat backward(const Parameters& p, const LayerCache& cache, const Mat& dy,
               std::span<double> grad) const override;
  std::string kind() const override { return "mixer-block"; }

 private:
  Eigen::Index tokens_;
  LayerNorm ln1_;
  FeedForward token_mlp_;
  LayerNorm ln2_;
  FeedForward channel_mlp_;
};

/// A parameter buffer plus an ordered layer list.
class Sequential {
 public:
  Parameters& parameters() { return params_; }
  const Parameters& parameters() const { return params_; }
  const std::vector<LayerPtr>& layers() const { return layers_; }

  template <typename L, typename... Args>
  void emplace(Args&&... args) {
    layers_.push_back(std::make_shared<const L>(std::forward<Args>(args)...));
  }

  using Trace = std::vector<LayerCache>;

  Mat forward(const Mat& x) const;
  Mat forward(const Mat& x, Trace& trace, const ForwardMode& mode = {}) const;
  /// Accumulates into grad (size = parameters().size()) and returns dL/dx.
  Mat backward(const Trace& trace, const Mat& dy, std::span<double> grad) const;

 private:
  Parameters params_;
  std::vector<LayerPtr> layers_;
};

}  // namespace mecsched
