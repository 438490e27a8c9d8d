#include "mecsched/tensor.hpp"

#include <functional>
#include <numeric>

namespace mecsched {

namespace {

std::size_t product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), values_(product(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (values_.size() != product(shape_)) {
    throw ShapeError("tensor value count does not match its shape");
  }
}

std::size_t Tensor::offset(std::initializer_list<std::size_t> index) const {
  if (index.size() != shape_.size()) throw ShapeError("index rank does not match tensor rank");
  std::size_t off = 0;
  std::size_t k = 0;
  for (std::size_t i : index) {
    if (i >= shape_[k]) throw ShapeError("tensor index out of range");
    off = off * shape_[k] + i;
    ++k;
  }
  return off;
}

double& Tensor::at(std::initializer_list<std::size_t> index) { return values_[offset(index)]; }

double Tensor::at(std::initializer_list<std::size_t> index) const {
  return values_[offset(index)];
}

std::pair<std::size_t, std::size_t> Tensor::slice_dims() const {
  if (shape_.size() == 3) return {shape_[1], shape_[2]};
  if (shape_.size() == 2) return {shape_[1], 1};
  throw ShapeError("matrix slices need a rank-2 or rank-3 tensor");
}

Mat Tensor::matrix(std::size_t b) const {
  const auto [rows, cols] = slice_dims();
  if (b >= shape_[0]) throw ShapeError("batch index out of range");
  return Eigen::Map<const Mat>(values_.data() + b * rows * cols, static_cast<Eigen::Index>(rows),
                               static_cast<Eigen::Index>(cols));
}

void Tensor::set_matrix(std::size_t b, const Mat& m) {
  const auto [rows, cols] = slice_dims();
  if (b >= shape_[0]) throw ShapeError("batch index out of range");
  if (static_cast<std::size_t>(m.rows()) != rows || static_cast<std::size_t>(m.cols()) != cols) {
    throw ShapeError("matrix does not fit the tensor slice");
  }
  Eigen::Map<Mat>(values_.data() + b * rows * cols, m.rows(), m.cols()) = m;
}

Tensor Tensor::stack(std::span<const Mat> mats) {
  if (mats.empty()) return Tensor({0, 0, 0});
  const auto rows = static_cast<std::size_t>(mats[0].rows());
  const auto cols = static_cast<std::size_t>(mats[0].cols());
  Tensor t({mats.size(), rows, cols});
  for (std::size_t b = 0; b < mats.size(); ++b) t.set_matrix(b, mats[b]);
  return t;
}

}  // namespace mecsched
