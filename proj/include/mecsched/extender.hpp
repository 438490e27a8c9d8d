#pragma once

// Padding to a fixed access count and circular position shifts.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mecsched/tensor.hpp"

namespace mecsched {

enum class PadMode { outlier, zero, random };

std::string to_string(PadMode mode);
PadMode pad_mode_from_string(const std::string& s);

struct ExtenderConfig {
  std::size_t n_bar = 40;
  double pad_value = -1.0;  // outlier token
  PadMode pad_mode = PadMode::outlier;
  std::uint64_t random_seed = 0;  // random mode draws U[0, 1) from this seed

  void validate() const;
};

struct PaddedFeatures {
  Mat features;                    // n_bar x 4
  std::vector<std::uint8_t> mask;  // 1 on the leading real rows

  std::size_t real_count() const;
};

/// First N rows carry the input; the remaining rows are filled per pad_mode.
PaddedFeatures pad(const Mat& features, const ExtenderConfig& cfg);

/// Rows where mask is set, in their original order.
Mat unpad(const Mat& output, std::span<const std::uint8_t> mask);

/// Rotates rows down by j: row i moves to (i + j) mod rows.
Mat shift(const Mat& rows, std::size_t j);
/// Undoes shift(rows, j).
Mat inverse_shift(const Mat& rows, std::size_t j);

}  // namespace mecsched
