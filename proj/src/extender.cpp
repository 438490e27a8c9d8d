#include "mecsched/extender.hpp"

#include <algorithm>

#include "mecsched/random.hpp"

namespace mecsched {

std::string to_string(PadMode mode) {
  switch (mode) {
    case PadMode::outlier: return "outlier";
    case PadMode::zero: return "zero";
    case PadMode::random: return "random";
  }
  return "unknown";
}

PadMode pad_mode_from_string(const std::string& s) {
  if (s == "outlier") return PadMode::outlier;
  if (s == "zero") return PadMode::zero;
  if (s == "random") return PadMode::random;
  throw std::invalid_argument("unknown pad mode '" + s + "'");
}

void ExtenderConfig::validate() const {
  if (n_bar == 0) throw std::invalid_argument("n_bar must be positive");
}

std::size_t PaddedFeatures::real_count() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

PaddedFeatures pad(const Mat& features, const ExtenderConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(features.rows());
  if (n > cfg.n_bar) {
    throw std::invalid_argument("instance has " + std::to_string(n) +
                                " rows, more than the padded length " + std::to_string(cfg.n_bar));
  }
  const auto n_bar = static_cast<Eigen::Index>(cfg.n_bar);
  PaddedFeatures out;
  out.features.resize(n_bar, features.cols());
  out.features.topRows(features.rows()) = features;
  const Eigen::Index pads = n_bar - features.rows();
  switch (cfg.pad_mode) {
    case PadMode::outlier:
      out.features.bottomRows(pads).setConstant(cfg.pad_value);
      break;
    case PadMode::zero:
      out.features.bottomRows(pads).setZero();
      break;
    case PadMode::random: {
      Rng rng = make_rng(cfg.random_seed);
      auto block = out.features.bottomRows(pads);
      for (Eigen::Index r = 0; r < block.rows(); ++r) {
        for (Eigen::Index c = 0; c < block.cols(); ++c) block(r, c) = uniform01(rng);
      }
      break;
    }
  }
  out.mask.assign(cfg.n_bar, 0);
  std::fill_n(out.mask.begin(), n, std::uint8_t{1});
  return out;
}

Mat unpad(const Mat& output, std::span<const std::uint8_t> mask) {
  if (static_cast<std::size_t>(output.rows()) != mask.size()) {
    throw ShapeError("mask length does not match output rows");
  }
  const auto n = static_cast<Eigen::Index>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
  Mat out(n, output.cols());
  Eigen::Index k = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) out.row(k++) = output.row(static_cast<Eigen::Index>(i));
  }
  return out;
}

Mat shift(const Mat& rows, std::size_t j) {
  const auto n = static_cast<std::size_t>(rows.rows());
  if (j >= n) throw std::invalid_argument("shift offset out of range");
  Mat out(rows.rows(), rows.cols());
  for (std::size_t i = 0; i < n; ++i) {
    out.row(static_cast<Eigen::Index>((i + j) % n)) = rows.row(static_cast<Eigen::Index>(i));
  }
  return out;
}

Mat inverse_shift(const Mat& rows, std::size_t j) {
  const auto n = static_cast<std::size_t>(rows.rows());
  if (j >= n) throw std::invalid_argument("shift offset out of range");
  Mat out(rows.rows(), rows.cols());
  for (std::size_t i = 0; i < n; ++i) {
    out.row(static_cast<Eigen::Index>(i)) = rows.row(static_cast<Eigen::Index>((i + j) % n));
  }
  return out;
}

}  // namespace mecsched
