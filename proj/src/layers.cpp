#include "mecsched/layers.hpp"

#include <cmath>

namespace mecsched {

namespace {

constexpr double kGeluScale = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluCubic = 0.044715;

Mat dropout_mask(Eigen::Index rows, Eigen::Index cols, const ForwardMode& mode) {
  Mat mask(rows, cols);
  const double keep = 1.0 - mode.dropout;
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = uniform01(*mode.rng) < keep ? 1.0 / keep : 0.0;
  }
  return mask;
}

bool dropout_active(const ForwardMode& mode) { return mode.rng != nullptr && mode.dropout > 0.0; }

}  // namespace

// ---------------------------------------------------------------- Parameters

std::size_t Parameters::add(std::string name, Eigen::Index rows, Eigen::Index cols) {
  slots_.push_back({std::move(name), rows, cols, values_.size()});
  values_.resize(values_.size() + static_cast<std::size_t>(rows * cols), 0.0);
  return slots_.size() - 1;
}

Eigen::Map<const Mat> Parameters::view(std::size_t slot) const {
  const ParamSlot& s = slots_[slot];
  return {values_.data() + s.offset, s.rows, s.cols};
}

Eigen::Map<Mat> Parameters::view(std::size_t slot) {
  const ParamSlot& s = slots_[slot];
  return {values_.data() + s.offset, s.rows, s.cols};
}

Eigen::Map<Mat> Parameters::view(std::span<double> buffer, std::size_t slot) const {
  const ParamSlot& s = slots_[slot];
  return {buffer.data() + s.offset, s.rows, s.cols};
}

// -------------------------------------------------------------------- Linear

Linear::Linear(Parameters& p, Rng& rng, std::string name, Eigen::Index in, Eigen::Index out)
    : weight_(p.add(name + ".weight", in, out)), bias_(p.add(name + ".bias", 1, out)) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  auto w = p.view(weight_);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = uniform(rng, -limit, limit);
  // Non-zero biases keep an all-zero input away from constant layer-norm rows.
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  auto b = p.view(bias_);
  for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = uniform(rng, -bound, bound);
}

Mat Linear::forward(const Parameters& p, const Mat& x, LayerCache& cache,
                    const ForwardMode&) const {
  cache.mats.assign(1, x);
  Mat y = x * p.view(weight_);
  y.rowwise() += p.view(bias_).row(0);
  return y;
}

Mat Linear::backward(const Parameters& p, const LayerCache& cache, const Mat& dy,
                     std::span<double> grad) const {
  const Mat& x = cache.mats[0];
  p.view(grad, weight_).noalias() += x.transpose() * dy;
  p.view(grad, bias_).row(0) += dy.colwise().sum();
  return dy * p.view(weight_).transpose();
}

// ----------------------------------------------------------------- LayerNorm

LayerNorm::LayerNorm(Parameters& p, std::string name, Eigen::Index dim, double eps)
    : gamma_(p.add(name + ".gamma", 1, dim)), beta_(p.add(name + ".beta", 1, dim)), eps_(eps) {
  p.view(gamma_).setOnes();
}

Mat LayerNorm::forward(const Parameters& p, const Mat& x, LayerCache& cache,
                       const ForwardMode&) const {
  const auto cols = static_cast<double>(x.cols());
  Mat xhat(x.rows(), x.cols());
  Mat inv_std(x.rows(), 1);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).sum() / cols;
    const auto centered = (x.row(r).array() - mean).eval();
    const double var = centered.square().sum() / cols;
    inv_std(r, 0) = 1.0 / std::sqrt(var + eps_);
    xhat.row(r) = centered * inv_std(r, 0);
  }
  Mat y = (xhat.array().rowwise() * p.view(gamma_).row(0).array()).matrix();
  y.rowwise() += p.view(beta_).row(0);
  cache.mats = {std::move(xhat), std::move(inv_std)};
  return y;
}

Mat LayerNorm::backward(const Parameters& p, const LayerCache& cache, const Mat& dy,
                        std::span<double> grad) const {
  const Mat& xhat = cache.mats[0];
  const Mat& inv_std = cache.mats[1];
  p.view(grad, gamma_).row(0) += (dy.array() * xhat.array()).colwise().sum().matrix();
  p.view(grad, beta_).row(0) += dy.colwise().sum();

  const auto cols = static_cast<double>(dy.cols());
  const Mat dxhat = (dy.array().rowwise() * p.view(gamma_).row(0).array()).matrix();
  Mat dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const double mean_d = dxhat.row(r).sum() / cols;
    const double mean_dx = dxhat.row(r).dot(xhat.row(r)) / cols;
    dx.row(r) = inv_std(r, 0) * (dxhat.row(r).array() - mean_d - xhat.row(r).array() * mean_dx).matrix();
  }
  return dx;
}

// ---------------------------------------------------------------- Activations

Mat Gelu::forward(const Parameters&, const Mat& x, LayerCache& cache, const ForwardMode&) const {
  cache.mats.assign(1, x);
  const auto a = x.array();
  const auto t = (kGeluScale * (a + kGeluCubic * a.cube())).tanh();
  return (0.5 * a * (1.0 + t)).matrix();
}

Mat Gelu::backward(const Parameters&, const LayerCache& cache, const Mat& dy,
                   std::span<double>) const {
  const auto a = cache.mats[0].array();
  const auto t = (kGeluScale * (a + kGeluCubic * a.cube())).tanh().eval();
  const auto dt = kGeluScale * (1.0 + 3.0 * kGeluCubic * a.square());
  const auto deriv = 0.5 * (1.0 + t) + 0.5 * a * (1.0 - t.square()) * dt;
  return (dy.array() * deriv).matrix();
}

Mat Sigmoid::forward(const Parameters&, const Mat& x, LayerCache& cache,
                     const ForwardMode&) const {
  Mat y = (1.0 / (1.0 + (-x.array()).exp())).matrix();
  cache.mats.assign(1, y);
  return y;
}

Mat Sigmoid::backward(const Parameters&, const LayerCache& cache, const Mat& dy,
                      std::span<double>) const {
  const auto y = cache.mats[0].array();
  return (dy.array() * y * (1.0 - y)).matrix();
}

PositionalEncoding::PositionalEncoding(Eigen::Index max_len, Eigen::Index dim)
    : table_(max_len, dim) {
  for (Eigen::Index pos = 0; pos < max_len; ++pos) {
    for (Eigen::Index i = 0; i < dim; ++i) {
      const double rate =
          std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(dim));
      const double angle = static_cast<double>(pos) * rate;
      table_(pos, i) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
}

Mat PositionalEncoding::forward(const Parameters&, const Mat& x, LayerCache&,
                                const ForwardMode&) const {
  if (x.rows() > table_.rows() || x.cols() != table_.cols()) {
    throw ShapeError("positional encoding table is smaller than the input");
  }
  return x + table_.topRows(x.rows());
}

Mat PositionalEncoding::backward(const Parameters&, const LayerCache&, const Mat& dy,
                                 std::span<double>) const {
  return dy;
}

// ----------------------------------------------------------------- Attention

MultiHeadSelfAttention::MultiHeadSelfAttention(Parameters& p, Rng& rng, std::string name,
                                               Eigen::Index dim, Eigen::Index heads)
    : q_(p, rng, name + ".q", dim, dim),
      k_(p, rng, name + ".k", dim, dim),
      v_(p, rng, name + ".v", dim, dim),
      o_(p, rng, name + ".o", dim, dim),
      dim_(dim),
      heads_(heads) {
  if (heads <= 0 || dim % heads != 0) {
    throw std::invalid_argument("model dimension must be divisible by the head count");
  }
}

Mat MultiHeadSelfAttention::forward(const Parameters& p, const Mat& x, LayerCache& cache,
                                    const ForwardMode& mode) const {
  if (x.cols() != dim_) throw ShapeError("attention input width mismatch");
  cache.children.resize(4);
  Mat q = q_.forward(p, x, cache.children[0], mode);
  Mat k = k_.forward(p, x, cache.children[1], mode);
  Mat v = v_.forward(p, x, cache.children[2], mode);

  const Eigen::Index dh = dim_ / heads_;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Mat concat(x.rows(), dim_);
  std::vector<Mat> attn(static_cast<std::size_t>(heads_));
  for (Eigen::Index h = 0; h < heads_; ++h) {
    Mat scores = scale * (q.middleCols(h * dh, dh) * k.middleCols(h * dh, dh).transpose());
    for (Eigen::Index r = 0; r < scores.rows(); ++r) {
      const double mx = scores.row(r).maxCoeff();
      scores.row(r) = (scores.row(r).array() - mx).exp().matrix();
      scores.row(r) /= scores.row(r).sum();
    }
    concat.middleCols(h * dh, dh).noalias() = scores * v.middleCols(h * dh, dh);
    attn[static_cast<std::size_t>(h)] = std::move(scores);
  }
  Mat y = o_.forward(p, concat, cache.children[3], mode);

  cache.mats.clear();
  cache.mats.reserve(5 + attn.size());
  cache.mats.push_back(x);
  cache.mats.push_back(std::move(q));
  cache.mats.push_back(std::move(k));
  cache.mats.push_back(std::move(v));
  cache.mats.push_back(std::move(concat));
  for (auto& a : attn) cache.mats.push_back(std::move(a));
  return y;
}

Mat MultiHeadSelfAttention::backward(const Parameters& p, const LayerCache& cache, const Mat& dy,
                                     std::span<double> grad) const {
  const Mat& q = cache.mats[1];
  const Mat& k = cache.mats[2];
  const Mat& v = cache.mats[3];
  const Eigen::Index dh = dim_ / heads_;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  const Mat dconcat = o_.backward(p, cache.children[3], dy, grad);
  Mat dq(q.rows(), dim_), dk(k.rows(), dim_), dv(v.rows(), dim_);
  for (Eigen::Index h = 0; h < heads_; ++h) {
    const Mat& a = attention(cache, h);
    const auto dout = dconcat.middleCols(h * dh, dh);
    const Mat da = dout * v.middleCols(h * dh, dh).transpose();
    dv.middleCols(h * dh, dh).noalias() = a.transpose() * dout;
    // Softmax Jacobian row by row: ds = a * (da - <da, a>).
    const Eigen::VectorXd inner = (da.array() * a.array()).rowwise().sum();
    const Mat ds = (a.array() * (da.array().colwise() - inner.array())).matrix() * scale;
    dq.middleCols(h * dh, dh).noalias() = ds * k.middleCols(h * dh, dh);
    dk.middleCols(h * dh, dh).noalias() = ds.transpose() * q.middleCols(h * dh, dh);
  }
  Mat dx = q_.backward(p, cache.children[0], dq, grad);
  dx += k_.backward(p, cache.children[1], dk, grad);
  dx += v_.backward(p, cache.children[2], dv, grad);
  return dx;
}

// --------------------------------------------------------------- FeedForward

FeedForward::FeedForward(Parameters& p, Rng& rng, std::string name, Eigen::Index dim,
                         Eigen::Index hidden)
    : FeedForward(p, rng, std::move(name), dim, hidden, dim) {}

FeedForward::FeedForward(Parameters& p, Rng& rng, std::string name, Eigen::Index in,
                         Eigen::Index hidden, Eigen::Index out)
    : in_(p, rng, name + ".in", in, hidden), out_(p, rng, name + ".out", hidden, out) {}

Mat FeedForward::forward(const Parameters& p, const Mat& x, LayerCache& cache,
                         const ForwardMode& mode) const {
  cache.children.resize(3);
  Mat h = in_.forward(p, x, cache.children[0], mode);
  h = act_.forward(p, h, cache.children[1], mode);
  return out_.forward(p, h, cache.children[2], mode);
}

Mat FeedForward::backward(const Parameters& p, const LayerCache& cache, const Mat& dy,
                          std::span<double> grad) const {
  Mat d = out_.backward(p, cache.children[2], dy, grad);
  d = act_.backward(p, cache.children[1], d, grad);
  return in_.backward(p, cache.children[0], d, grad);
}

// ------------------------------------------------------------------- Blocks

EncoderLayer::EncoderLayer(Parameters& p, Rng& rng, std::string name, Eigen::Index dim,
                           Eigen::Index heads, Eigen::Index ffn_dim)
    : ln1_(p, name + ".ln1", dim),
      attn_(p, rng, name + ".attn", dim, heads),
      ln2_(p, name + ".ln2", dim),
      ffn_(p, rng, name + ".ffn", dim, ffn_dim) {}

Mat EncoderLayer::forward(const Parameters& p, const Mat& x, LayerCache& cache,
                          const ForwardMode& mode) const {
  cache.children.resize(4);
  cache.mats.clear();
  Mat a = attn_.forward(p, ln1_.forward(p, x, cache.children[0], mode), cache.children[1], mode);
  if (dropout_active(mode)) {
    cache.mats.push_back(dropout_mask(a.rows(), a.cols(), mode));
    a.array() *= cache.mats.back().array();
  }
  Mat h = x + a;
  Mat f = ffn_.forward(p, ln2_.forward(p, h, cache.children[2], mode), cache.children[3], mode);
  if (dropout_active(mode)) {
    cache.mats.push_back(dropout_mask(f.rows(), f.cols(), mode));
    f.array() *= cache.mats.back().array();
  }
  return h + f;
}

Mat EncoderLayer::backward(const Parameters& p, const LayerCache& cache, const Mat& dy,
                           std::span<double> grad) const {
  const bool dropped = cache.mats.size() == 2;
  Mat df = dy;
  if (dropped) df.array() *= cache.mats[1].array();
  Mat dh = dy + ln2_.backward(p, cache.children[2], ffn_.backward(p, cache.children[3], df, grad),
                              grad);
  Mat da = dh;
  if (dropped) da.array() *= cache.mats[0].array();
  return dh + ln1_.backward(p, cache.children[0], attn_.backward(p, cache.children[1], da, grad),
                            grad);
}

MlpBlock::MlpBlock(Parameters& p, Rng& rng, std::string name, Eigen::Index dim,
                   Eigen::Index hidden)
    : ln_(p, name + ".ln", dim), ffn_(p, rng, name + ".ffn", dim, hidden) {}

Mat MlpBlock::forward(const Parameters& p, const Mat& x, LayerCache& cache,
                      const ForwardMode& mode) const {
  cache.children.resize(2);
  cache.mats.clear();
  Mat f = ffn_.forward(p, ln_.forward(p, x, cache.children[0], mode), cache.children[1], mode);
  if (dropout_active(mode)) {
    cache.mats.push_back(dropout_mask(f.rows(), f.cols(), mode));
    f.array() *= cache.mats.back().array();
  }
  return x + f;
}

Mat MlpBlock::backward(const Parameters& p, const LayerCache& cache, const Mat& dy,
                       std::span<double> grad) const {
  Mat df = dy;
  if (!cache.mats.empty()) df.array() *= cache.mats[0].array();
  return dy + ln_.backward(p, cache.children[0], ffn_.backward(p, cache.children[1], df, grad),
                           grad);
}

MixerBlock::MixerBlock(Parameters& p, Rng& rng, std::string name, Eigen::Index tokens,
                       Eigen::Index dim, Eigen::Index token_hidden, Eigen::Index channel_hidden)
    : tokens_(tokens),
      ln1_(p, name + ".ln1", dim),
      token_mlp_(p, rng, name + ".token_mlp", tokens, token_hidden, tokens),
      ln2_(p, name + ".ln2", dim),
      channel_mlp_(p, rng, name + ".channel_mlp", dim, channel_hidden, dim) {}

Mat MixerBlock::forward(const Parameters& p, const Mat& x, LayerCache& cache,
                        const ForwardMode& mode) const {
  if (x.rows() != tokens_) throw ShapeError("mixer block expects a fixed sequence length");
  cache.children.resize(4);
  cache.mats.clear();
  const Mat normed = ln1_.forward(p, x, cache.children[0], mode);
  Mat t = token_mlp_.forward(p, normed.transpose(), cache.children[1], mode).transpose();
  if (dropout_active(mode)) {
    cache.mats.push_back(dropout_mask(t.rows(), t.cols(), mode));
    t.array() *= cache.mats.back().array();
  }
  Mat h = x + t;
  Mat f = channel_mlp_.forward(p, ln2_.forward(p, h, cache.children[2], mode),
                               cache.children[3], mode);
  if (dropout_active(mode)) {
    cache.mats.push_back(dropout_mask(f.rows(), f.cols(), mode));
    f.array() *= cache.mats.back().array();
  }
  return h + f;
}

Mat MixerBlock::backward(const Parameters& p, const LayerCache& cache, const Mat& dy,
                         std::span<double> grad) const {
  const bool dropped = cache.mats.size() == 2;
  Mat df = dy;
  if (dropped) df.array() *= cache.mats[1].array();
  Mat dh = dy + ln2_.backward(p, cache.children[2],
                              channel_mlp_.backward(p, cache.children[3], df, grad), grad);
  Mat dt = dh;
  if (dropped) dt.array() *= cache.mats[0].array();
  const Mat dnormed_t = token_mlp_.backward(p, cache.children[1], dt.transpose(), grad);
  return dh + ln1_.backward(p, cache.children[0], dnormed_t.transpose(), grad);
}

// ---------------------------------------------------------------- Sequential

Mat Sequential::forward(const Mat& x) const {
  Trace trace;
  return forward(x, trace);
}

Mat Sequential::forward(const Mat& x, Trace& trace, const ForwardMode& mode) const {
  trace.resize(layers_.size());
  Mat h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) h = layers_[i]->forward(params_, h, trace[i], mode);
  return h;
}

Mat Sequential::backward(const Trace& trace, const Mat& dy, std::span<double> grad) const {
  if (grad.size() != params_.size()) throw ShapeError("gradient buffer size mismatch");
  Mat d = dy;
  for (std::size_t i = layers_.size(); i-- > 0;) d = layers_[i]->backward(params_, trace[i], d, grad);
  return d;
}

}  // namespace mecsched
