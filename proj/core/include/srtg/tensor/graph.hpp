#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "srtg/tensor/tensor.hpp"

namespace srtg::tensor {

class Graph;

/// Handle to a node on a Graph tape. Cheap to copy; valid while its graph lives.
class Var {
 public:
  Var() = default;

  Graph& graph() const { return *graph_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return graph_ != nullptr; }

  const Shape& shape() const;
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const;
  std::span<const double> value() const;
  double item() const;

 private:
  friend class Graph;
  Var(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

/// Append-only tape for reverse-mode differentiation.
///
/// A graph is built by one forward pass and consumed by one backward pass.
/// Parameters enter through param(); their gradients are accumulated into the
/// bound Tensor when backward() runs. Single-threaded; distinct graphs share
/// no state.
class Graph {
 public:
  /// Receives this node's output gradient and forward value, and accumulates
  /// into input gradients through Graph::grad().
  using BackwardFn =
      std::function<void(Graph&, std::span<const double> grad, std::span<const double> value)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  Var constant(Shape shape, std::vector<double> values);
  /// Leaf bound to a persistent parameter. The tensor must outlive the graph.
  Var param(Tensor& parameter);

  /// Appends an operation node. `backward` may be empty when no input needs
  /// a gradient.
  Var record(std::string_view op, Shape shape, std::vector<double> value,
             std::vector<Var> inputs, BackwardFn backward);

  const Shape& shape(Var v) const { return node(v).shape; }
  std::span<const double> value(Var v) const { return node(v).value; }
  std::string_view op(Var v) const { return node(v).op; }
  bool needs_grad(Var v) const { return node(v).requires_grad; }
  bool any_needs_grad(std::span<const Var> vars) const;

  /// Gradient buffer of `v`, zero-allocated on first access.
  std::span<double> grad(Var v);
  /// Gradient already computed for `v` (empty if none flowed).
  std::span<const double> grad_of(Var v) const { return node(v).grad; }

  /// Propagates d(loss)/d(node) back to every parameter leaf.
  void backward(Var loss);

  std::size_t size() const noexcept { return nodes_.size(); }
  bool consumed() const noexcept { return consumed_; }

 private:
  struct Node {
    std::string_view op;
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    Tensor* param = nullptr;
    bool requires_grad = false;
  };

  const Node& node(Var v) const;
  Node& node(Var v);
  void check_owned(Var v) const;

  std::deque<Node> nodes_;
  bool consumed_ = false;
};

}  // namespace srtg::tensor
