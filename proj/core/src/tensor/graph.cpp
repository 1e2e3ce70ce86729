#include "srtg/tensor/graph.hpp"

#include <stdexcept>
#include <string>

namespace srtg::tensor {

const Shape& Var::shape() const { return graph_->shape(*this); }

std::size_t Var::dim(std::size_t axis) const {
  const Shape& s = shape();
  if (axis >= s.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " +
                     shape_string(s));
  }
  return s[axis];
}

std::size_t Var::size() const { return graph_->value(*this).size(); }

std::span<const double> Var::value() const { return graph_->value(*this); }

double Var::item() const {
  auto v = value();
  if (v.size() != 1) throw ShapeError("item() on a non-scalar of shape " + shape_string(shape()));
  return v[0];
}

void Graph::check_owned(Var v) const {
  if (v.graph_ != this || v.id_ >= nodes_.size()) {
    throw std::invalid_argument("variable does not belong to this graph");
  }
}

const Graph::Node& Graph::node(Var v) const {
  check_owned(v);
  return nodes_[v.id_];
}

Graph::Node& Graph::node(Var v) {
  check_owned(v);
  return nodes_[v.id_];
}

Var Graph::constant(Tensor value) {
  if (value.empty()) throw ShapeError("empty tensor");
  Node n;
  n.op = "constant";
  n.shape = value.shape();
  n.value = value.values();
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Graph::constant(Shape shape, std::vector<double> values) {
  return constant(Tensor(std::move(shape), std::move(values)));
}

Var Graph::param(Tensor& parameter) {
  if (parameter.empty()) throw ShapeError("empty parameter tensor");
  Node n;
  n.op = "param";
  n.shape = parameter.shape();
  n.value = parameter.values();
  n.param = &parameter;
  n.requires_grad = parameter.requires_grad();
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

bool Graph::any_needs_grad(std::span<const Var> vars) const {
  for (const Var& v : vars) {
    if (needs_grad(v)) return true;
  }
  return false;
}

Var Graph::record(std::string_view op, Shape shape, std::vector<double> value,
                  std::vector<Var> inputs, BackwardFn backward) {
  if (element_count(shape) != value.size()) {
    throw ShapeError(std::string(op) + ": value length does not match shape " +
                     shape_string(shape));
  }
  Node n;
  n.op = op;
  n.shape = std::move(shape);
  n.value = std::move(value);
  n.requires_grad = any_needs_grad(inputs);
  n.inputs.reserve(inputs.size());
  for (const Var& in : inputs) {
    check_owned(in);
    n.inputs.push_back(in.id_);
  }
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

std::span<double> Graph::grad(Var v) {
  Node& n = node(v);
  if (n.grad.empty()) n.grad.assign(n.value.size(), 0.0);
  return n.grad;
}

void Graph::backward(Var loss) {
  if (consumed_) {
    throw std::logic_error("backward already ran on this graph; re-run the forward pass");
  }
  const Node& root = node(loss);
  if (root.value.size() != 1) {
    throw ShapeError("backward requires a scalar loss, got shape " + shape_string(root.shape));
  }
  consumed_ = true;
  if (!root.requires_grad) return;
  grad(loss)[0] = 1.0;
  for (std::size_t i = loss.id_ + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(*this, n.grad, n.value);
    if (n.param != nullptr) n.param->accumulate_grad(n.grad);
  }
}

}  // namespace srtg::tensor
