#include "mecsched/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mecsched {

namespace {

constexpr double kProbabilityFloor = 1e-12;

Eigen::Index idx(std::size_t v) { return static_cast<Eigen::Index>(v); }

}  // namespace

std::string to_string(BodyKind kind) {
  switch (kind) {
    case BodyKind::transformer: return "transformer";
    case BodyKind::mlp: return "mlp";
    case BodyKind::mixer: return "mixer";
  }
  return "unknown";
}

std::string to_string(HeadKind kind) {
  return kind == HeadKind::offload ? "offload" : "resource";
}

BodyKind body_kind_from_string(const std::string& s) {
  if (s == "transformer") return BodyKind::transformer;
  if (s == "mlp") return BodyKind::mlp;
  if (s == "mixer") return BodyKind::mixer;
  throw std::invalid_argument("unknown network body '" + s + "'");
}

HeadKind head_kind_from_string(const std::string& s) {
  if (s == "offload") return HeadKind::offload;
  if (s == "resource") return HeadKind::resource;
  throw std::invalid_argument("unknown network head '" + s + "'");
}

void NetConfig::validate() const {
  if (embed_dim == 0 || ffn_dim == 0) throw std::invalid_argument("network widths must be positive");
  if (head_count == 0 || embed_dim % head_count != 0) {
    throw std::invalid_argument("embed_dim must be divisible by head_count");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("dropout must lie in [0, 1)");
  if (sequence_length == 0) throw std::invalid_argument("sequence_length must be positive");
}

Network::Network(const NetConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  Rng rng = make_rng(cfg_.seed);
  Parameters& p = model_.parameters();
  const Eigen::Index e = idx(cfg_.embed_dim);
  const Eigen::Index ffn = idx(cfg_.ffn_dim);

  model_.emplace<Linear>(p, rng, "embed.0", idx(kTaskFeatures), e);
  model_.emplace<Gelu>();
  model_.emplace<Linear>(p, rng, "embed.1", e, e);
  if (cfg_.positional_encoding) model_.emplace<PositionalEncoding>(idx(cfg_.sequence_length), e);
  for (std::size_t l = 0; l < cfg_.encoder_layers; ++l) {
    const std::string name = "body." + std::to_string(l);
    switch (cfg_.body) {
      case BodyKind::transformer:
        model_.emplace<EncoderLayer>(p, rng, name, e, idx(cfg_.head_count), ffn);
        break;
      case BodyKind::mlp:
        model_.emplace<MlpBlock>(p, rng, name, e, ffn);
        break;
      case BodyKind::mixer:
        model_.emplace<MixerBlock>(p, rng, name, idx(cfg_.sequence_length), e, ffn, ffn);
        break;
    }
  }
  model_.emplace<LayerNorm>(p, "body.norm", e);
  model_.emplace<Linear>(p, rng, "head.0", e, e);
  model_.emplace<Gelu>();
  model_.emplace<Linear>(p, rng, "head.1", e, idx(cfg_.output_dim()));
  model_.emplace<Sigmoid>();
}

void Network::check_input(const Mat& features) const {
  if (features.cols() != idx(kTaskFeatures)) throw ShapeError("network input must have 4 columns");
  if (features.rows() == 0) throw ShapeError("network input has no positions");
  const bool fixed = cfg_.body == BodyKind::mixer;
  if ((fixed && features.rows() != idx(cfg_.sequence_length)) ||
      (cfg_.positional_encoding && features.rows() > idx(cfg_.sequence_length))) {
    throw ShapeError("network input length does not match sequence_length");
  }
}

Mat Network::forward(const Mat& features) const {
  check_input(features);
  return model_.forward(features);
}

Mat Network::forward(const Mat& features, Sequential::Trace& trace,
                     const ForwardMode& mode) const {
  check_input(features);
  return model_.forward(features, trace, mode);
}

void Network::backward(const Sequential::Trace& trace, const Mat& d_output,
                       std::span<double> grad) const {
  model_.backward(trace, d_output, grad);
}

Tensor Network::forward(const Tensor& batch) const {
  if (batch.rank() != 3 || batch.shape()[2] != kTaskFeatures) {
    throw ShapeError("batched input must be B x P x 4");
  }
  const std::size_t b = batch.shape()[0];
  const std::size_t positions = batch.shape()[1];
  const std::size_t out = cfg_.output_dim();
  Tensor result = out == 1 ? Tensor({b, positions}) : Tensor({b, positions, out});
  for (std::size_t i = 0; i < b; ++i) result.set_matrix(i, forward(batch.matrix(i)));
  return result;
}

// --------------------------------------------------------------------- loss

LossValue loss_sum(LossKind kind, const Mat& prediction, const Mat& target, const Mat& mask) {
  if (prediction.rows() != target.rows() || prediction.cols() != target.cols() ||
      prediction.rows() != mask.rows() || prediction.cols() != mask.cols()) {
    throw ShapeError("loss operands must share one shape");
  }
  LossValue out;
  out.gradient = Mat::Zero(prediction.rows(), prediction.cols());
  for (Eigen::Index i = 0; i < prediction.size(); ++i) {
    if (mask.data()[i] == 0.0) continue;
    ++out.count;
    const double y = target.data()[i];
    if (kind == LossKind::mean_squared_error) {
      const double diff = prediction.data()[i] - y;
      out.value += diff * diff;
      out.gradient.data()[i] = 2.0 * diff;
    } else {
      const double p = std::clamp(prediction.data()[i], kProbabilityFloor, 1.0 - kProbabilityFloor);
      out.value -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
      out.gradient.data()[i] = (p - y) / (p * (1.0 - p));
    }
  }
  return out;
}

LossValue loss(LossKind kind, const Mat& prediction, const Mat& target, const Mat& mask) {
  LossValue out = loss_sum(kind, prediction, target, mask);
  if (out.count == 0) throw std::invalid_argument("loss mask selects no positions");
  const double n = static_cast<double>(out.count);
  out.value /= n;
  out.gradient /= n;
  return out;
}

LossValue loss(LossKind kind, const Tensor& prediction, const Tensor& target, const Tensor& mask) {
  if (prediction.shape() != target.shape() || prediction.shape() != mask.shape()) {
    throw ShapeError("loss operands must share one shape");
  }
  const auto flat = [](const Tensor& t) {
    return Eigen::Map<const Mat>(t.values().data(), 1, static_cast<Eigen::Index>(t.size()));
  };
  LossValue out = loss(kind, Mat(flat(prediction)), Mat(flat(target)), Mat(flat(mask)));
  return out;
}

// ---------------------------------------------------------- layer variants

void LayerSpec::validate() const {
  if (input_dim <= 0 || output_dim <= 0 || hidden_dim <= 0 || tokens <= 0) {
    throw std::invalid_argument("layer sizes must be positive");
  }
  const bool attention = variant == LayerVariant::multi_head_self_attention ||
                         variant == LayerVariant::encoder_layer;
  if (attention && (head_count <= 0 || input_dim % head_count != 0)) {
    throw std::invalid_argument("input_dim must be divisible by head_count");
  }
}

Sequential make_layer_model(const LayerSpec& spec, std::uint64_t seed) {
  spec.validate();
  Sequential model;
  Parameters& p = model.parameters();
  Rng rng = make_rng(seed);
  switch (spec.variant) {
    case LayerVariant::linear:
      model.emplace<Linear>(p, rng, "linear", spec.input_dim, spec.output_dim);
      break;
    case LayerVariant::layer_norm: {
      model.emplace<LayerNorm>(p, "layer_norm", spec.input_dim);
      // Non-trivial affine parameters so their gradients are exercised.
      for (double& v : p.values()) v += uniform(rng, -0.5, 0.5);
      break;
    }
    case LayerVariant::multi_head_self_attention:
      model.emplace<MultiHeadSelfAttention>(p, rng, "attn", spec.input_dim, spec.head_count);
      break;
    case LayerVariant::feed_forward:
      model.emplace<FeedForward>(p, rng, "ffn", spec.input_dim, spec.hidden_dim);
      break;
    case LayerVariant::mixer_block:
      model.emplace<MixerBlock>(p, rng, "mixer", spec.tokens, spec.input_dim, spec.hidden_dim,
                                spec.hidden_dim);
      break;
    case LayerVariant::encoder_layer:
      model.emplace<EncoderLayer>(p, rng, "encoder", spec.input_dim, spec.head_count,
                                  spec.hidden_dim);
      break;
    case LayerVariant::mlp_block:
      model.emplace<MlpBlock>(p, rng, "mlp", spec.input_dim, spec.hidden_dim);
      break;
  }
  return model;
}

GradCheckResult grad_check(Sequential& model, const Mat& input, double epsilon,
                           std::size_t coordinates, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  Sequential::Trace trace;
  const Mat out = model.forward(input, trace);
  Mat weights(out.rows(), out.cols());
  for (Eigen::Index i = 0; i < weights.size(); ++i) weights.data()[i] = uniform(rng, -1.0, 1.0);

  std::vector<double> grad(model.parameters().size(), 0.0);
  model.backward(trace, weights, grad);

  std::vector<std::size_t> coords(grad.size());
  std::iota(coords.begin(), coords.end(), std::size_t{0});
  if (coords.size() > coordinates) {
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(coordinates);
  }

  auto objective = [&] { return (model.forward(input).array() * weights.array()).sum(); };
  // Differences carry roundoff of order ulp(L) / epsilon, so the floor grows with |L|.
  const double floor = 1e-6 * std::max(1.0, std::abs((out.array() * weights.array()).sum()));
  std::span<double> values = model.parameters().values();
  GradCheckResult result;
  for (std::size_t c : coords) {
    const double saved = values[c];
    values[c] = saved + epsilon;
    const double plus = objective();
    values[c] = saved - epsilon;
    const double minus = objective();
    values[c] = saved;
    const double numeric = (plus - minus) / (2.0 * epsilon);
    const double denom = std::max({std::abs(grad[c]), std::abs(numeric), floor});
    result.max_relative_error = std::max(result.max_relative_error, std::abs(grad[c] - numeric) / denom);
  }
  result.coordinates = coords.size();
  return result;
}

}  // namespace mecsched
