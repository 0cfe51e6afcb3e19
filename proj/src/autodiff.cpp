#include "ars/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "ars/core.hpp"

namespace ars::net {
namespace {

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::DimensionMismatch, what);
}

}  // namespace

Var Tape::push(std::vector<double> value, std::function<void(Tape&, const Node&)> backprop) {
  const std::size_t n = value.size();
  nodes_.push_back(Node{std::move(value), std::vector<double>(n, 0.0), std::move(backprop)});
  return Var{nodes_.size() - 1};
}

Var Tape::leaf(std::span<const double> values) { return leaf(std::vector<double>(values.begin(), values.end())); }

Var Tape::leaf(std::vector<double> values) { return push(std::move(values), nullptr); }

Var Tape::affine(Var weight, Var bias, Var x) {
  const auto& w = value(weight);
  const auto& b = value(bias);
  const auto& in = value(x);
  const std::size_t rows = b.size();
  const std::size_t cols = in.size();
  require(w.size() == rows * cols, "affine: weight shape does not match bias and input");
  std::vector<double> out(b);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = w.data() + r * cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * in[c];
    out[r] += acc;
  }
  return push(std::move(out), [weight, bias, x, rows, cols](Tape& t, const Node& self) {
    const auto& wv = t.value(weight);
    const auto& xv = t.value(x);
    auto& gw = t.grad_mut(weight);
    auto& gb = t.grad_mut(bias);
    auto& gx = t.grad_mut(x);
    for (std::size_t r = 0; r < rows; ++r) {
      const double g = self.grad[r];
      if (g == 0.0) continue;
      gb[r] += g;
      const double* row = wv.data() + r * cols;
      double* grow = gw.data() + r * cols;
      for (std::size_t c = 0; c < cols; ++c) {
        grow[c] += g * xv[c];
        gx[c] += g * row[c];
      }
    }
  });
}

Var Tape::leaky_relu(Var x, double negative_slope) {
  std::vector<double> out(value(x));
  for (double& v : out) v = v > 0.0 ? v : negative_slope * v;
  return push(std::move(out), [x, negative_slope](Tape& t, const Node& self) {
    const auto& xv = t.value(x);
    auto& gx = t.grad_mut(x);
    for (std::size_t i = 0; i < xv.size(); ++i) gx[i] += self.grad[i] * (xv[i] > 0.0 ? 1.0 : negative_slope);
  });
}

Var Tape::sigmoid(Var x) {
  std::vector<double> out(value(x));
  for (double& v : out) v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  return push(std::move(out), [x](Tape& t, const Node& self) {
    auto& gx = t.grad_mut(x);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i] * self.value[i] * (1.0 - self.value[i]);
  });
}

Var Tape::affine_const(Var x, double scale, double shift) {
  std::vector<double> out(value(x));
  for (double& v : out) v = scale * v + shift;
  return push(std::move(out), [x, scale](Tape& t, const Node& self) {
    auto& gx = t.grad_mut(x);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += scale * self.grad[i];
  });
}

Var Tape::add(Var a, Var b) {
  require(value(a).size() == value(b).size(), "add: size mismatch");
  std::vector<double> out(value(a));
  const auto& bv = value(b);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return push(std::move(out), [a, b](Tape& t, const Node& self) {
    auto& ga = t.grad_mut(a);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i];
    auto& gb = t.grad_mut(b);
    for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += self.grad[i];
  });
}

Var Tape::mul(Var a, Var b) {
  require(value(a).size() == value(b).size(), "mul: size mismatch");
  std::vector<double> out(value(a));
  const auto& bv = value(b);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return push(std::move(out), [a, b](Tape& t, const Node& self) {
    const auto& av = t.value(a);
    const auto& bv2 = t.value(b);
    auto& ga = t.grad_mut(a);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i] * bv2[i];
    auto& gb = t.grad_mut(b);
    for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += self.grad[i] * av[i];
  });
}

Var Tape::mul_const(Var a, std::span<const double> c) {
  require(value(a).size() == c.size(), "mul_const: size mismatch");
  std::vector<double> out(value(a));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= c[i];
  std::vector<double> coeff(c.begin(), c.end());
  return push(std::move(out), [a, coeff = std::move(coeff)](Tape& t, const Node& self) {
    auto& ga = t.grad_mut(a);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i] * coeff[i];
  });
}

Var Tape::softmax_cross_entropy(Var scores, std::size_t label) {
  const auto& s = value(scores);
  require(label < s.size(), "softmax_cross_entropy: label out of range");
  const double top = *std::max_element(s.begin(), s.end());
  double z = 0.0;
  for (double v : s) z += std::exp(v - top);
  const double log_z = top + std::log(z);
  return push({log_z - s[label]}, [scores, label, log_z](Tape& t, const Node& self) {
    const auto& sv = t.value(scores);
    auto& gs = t.grad_mut(scores);
    const double g = self.grad[0];
    for (std::size_t i = 0; i < sv.size(); ++i) {
      gs[i] += g * (std::exp(sv[i] - log_z) - (i == label ? 1.0 : 0.0));
    }
  });
}

Var Tape::min_element(Var x) {
  const auto& xv = value(x);
  require(!xv.empty(), "min_element: empty input");
  const auto at = static_cast<std::size_t>(std::min_element(xv.begin(), xv.end()) - xv.begin());
  return push({xv[at]}, [x, at](Tape& t, const Node& self) { t.grad_mut(x)[at] += self.grad[0]; });
}

Var Tape::abs(Var x) {
  std::vector<double> out(value(x));
  for (double& v : out) v = std::abs(v);
  return push(std::move(out), [x](Tape& t, const Node& self) {
    const auto& xv = t.value(x);
    auto& gx = t.grad_mut(x);
    for (std::size_t i = 0; i < gx.size(); ++i) {
      gx[i] += self.grad[i] * (xv[i] > 0.0 ? 1.0 : (xv[i] < 0.0 ? -1.0 : 0.0));
    }
  });
}

Var Tape::l2_norm(Var x) {
  double acc = 0.0;
  for (double v : value(x)) acc += v * v;
  const double norm = std::sqrt(acc);
  return push({norm}, [x, norm](Tape& t, const Node& self) {
    if (norm == 0.0) return;
    const auto& xv = t.value(x);
    auto& gx = t.grad_mut(x);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[0] * xv[i] / norm;
  });
}

Var Tape::weighted_sum(std::span<const Var> terms, std::span<const double> weights) {
  require(terms.size() == weights.size(), "weighted_sum: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    require(value(terms[i]).size() == 1, "weighted_sum: terms must be scalars");
    acc += weights[i] * scalar(terms[i]);
  }
  std::vector<Var> ts(terms.begin(), terms.end());
  std::vector<double> ws(weights.begin(), weights.end());
  return push({acc}, [ts = std::move(ts), ws = std::move(ws)](Tape& t, const Node& self) {
    for (std::size_t i = 0; i < ts.size(); ++i) t.grad_mut(ts[i])[0] += ws[i] * self.grad[0];
  });
}

void Tape::backward(Var out) {
  require(value(out).size() == 1, "backward: output must be a scalar");
  for (auto& node : nodes_) std::fill(node.grad.begin(), node.grad.end(), 0.0);
  nodes_[out.id].grad[0] = 1.0;
  for (std::size_t i = out.id + 1; i-- > 0;) {
    const Node& node = nodes_[i];
    if (node.backprop) node.backprop(*this, node);
  }
}

}  // namespace ars::net
