#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

// Minimal reverse-mode automatic differentiation over dense vectors. Nodes
// are appended in evaluation order, so the tape itself is a topological
// order and backward() is a single reverse sweep.
namespace ars::net {

struct Var {
  std::size_t id = 0;
};

class Tape {
 public:
  Var leaf(std::span<const double> values);
  Var leaf(std::vector<double> values);

  const std::vector<double>& value(Var v) const { return nodes_[v.id].value; }
  const std::vector<double>& grad(Var v) const { return nodes_[v.id].grad; }
  double scalar(Var v) const { return nodes_[v.id].value.at(0); }
  std::size_t size() const noexcept { return nodes_.size(); }

  // y = W x + b with W stored row-major as (b.size() x x.size()).
  Var affine(Var weight, Var bias, Var x);
  Var leaky_relu(Var x, double negative_slope);
  Var sigmoid(Var x);
  // y = scale * x + shift, elementwise with scalar constants.
  Var affine_const(Var x, double scale, double shift);
  Var add(Var a, Var b);
  Var mul(Var a, Var b);
  // Elementwise product with a constant vector.
  Var mul_const(Var a, std::span<const double> c);
  // -log softmax(scores)[label], a scalar.
  Var softmax_cross_entropy(Var scores, std::size_t label);
  // Minimum entry; the gradient goes to the first argmin only.
  Var min_element(Var x);
  // Elementwise |x|; subgradient 0 at 0.
  Var abs(Var x);
  // ||x||_2 as a scalar; subgradient 0 at 0.
  Var l2_norm(Var x);
  // sum_i weights[i] * terms[i] for scalar terms.
  Var weighted_sum(std::span<const Var> terms, std::span<const double> weights);

  // Seeds d(out)/d(out) = 1 for scalar `out` and propagates to every node.
  void backward(Var out);

 private:
  struct Node {
    std::vector<double> value;
    std::vector<double> grad;
    std::function<void(Tape&, const Node&)> backprop;
  };

  Var push(std::vector<double> value, std::function<void(Tape&, const Node&)> backprop);
  std::vector<double>& grad_mut(Var v) { return nodes_[v.id].grad; }

  std::vector<Node> nodes_;
};

}  // namespace ars::net
