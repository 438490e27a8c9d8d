#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace mecsched {

/// Row-major dense matrix; one row per token/position.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Contiguous row-major tensor with an explicit shape.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<double> values);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return values_.size(); }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  double& at(std::initializer_list<std::size_t> index);
  double at(std::initializer_list<std::size_t> index) const;

  /// Slice b of a rank-3 (B x R x C) or rank-2 (B x R, viewed as R x 1) tensor.
  Mat matrix(std::size_t b) const;
  void set_matrix(std::size_t b, const Mat& m);

  /// Stacks equally-shaped matrices into B x R x C.
  static Tensor stack(std::span<const Mat> mats);

 private:
  std::size_t offset(std::initializer_list<std::size_t> index) const;
  std::pair<std::size_t, std::size_t> slice_dims() const;

  std::vector<std::size_t> shape_;
  std::vector<double> values_;
};

}  // namespace mecsched
