#include "srtg/tensor/tensor.hpp"

#include <algorithm>
#include <sstream>

namespace srtg::tensor {

std::size_t element_count(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ')';
  return os.str();
}

std::string extent_string(const Extent3& e) {
  std::ostringstream os;
  os << e.t << 'x' << e.h << 'x' << e.w;
  return os.str();
}

namespace {

void check_extents(const Shape& shape) {
  if (shape.empty()) throw ShapeError("tensor shape must have at least one axis");
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (shape[i] == 0) {
      throw ShapeError("axis " + std::to_string(i) + " of shape " + shape_string(shape) +
                       " is not positive");
    }
  }
}

}  // namespace

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  check_extents(shape_);
  data_.assign(element_count(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  check_extents(shape_);
  if (element_count(shape_) != data_.size()) {
    throw ShapeError("shape " + shape_string(shape_) + " holds " +
                     std::to_string(element_count(shape_)) + " elements but " +
                     std::to_string(data_.size()) + " values were given");
  }
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " +
                     shape_string(shape_));
  }
  return shape_[axis];
}

void Tensor::set_requires_grad(bool on) {
  requires_grad_ = on;
  if (!on) grad_.reset();
}

std::span<double> Tensor::grad() {
  if (!grad_) throw std::logic_error("tensor has no gradient buffer");
  return *grad_;
}

std::span<const double> Tensor::grad() const {
  if (!grad_) throw std::logic_error("tensor has no gradient buffer");
  return *grad_;
}

void Tensor::zero_grad() {
  if (!grad_) {
    grad_.emplace(data_.size(), 0.0);
  } else {
    std::fill(grad_->begin(), grad_->end(), 0.0);
  }
}

void Tensor::accumulate_grad(std::span<const double> g) {
  if (g.size() != data_.size()) {
    throw ShapeError("gradient length " + std::to_string(g.size()) +
                     " does not match tensor length " + std::to_string(data_.size()));
  }
  if (!grad_) grad_.emplace(data_.size(), 0.0);
  auto& dst = *grad_;
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
}

void Tensor::reshape(Shape shape) {
  check_extents(shape);
  if (element_count(shape) != data_.size()) {
    throw ShapeError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  shape_ = std::move(shape);
}

}  // namespace srtg::tensor
