#pragma once

// Reference implementations shared by the unit and acceptance tests. They
// deliberately avoid the library's own numerics so that agreement means
// something.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "ars/certify.hpp"

namespace ars::testing {

// P[Binomial(n, p) >= k] by direct summation of the pmf in long double.
inline long double binomial_upper_tail(std::uint64_t k, std::uint64_t n, long double p) {
  if (k == 0) return 1.0L;
  if (p <= 0.0L) return 0.0L;
  if (p >= 1.0L) return 1.0L;
  const long double lp = std::log(p);
  const long double lq = std::log1p(-p);
  const long double lgn = std::lgamma(static_cast<long double>(n) + 1.0L);
  long double sum = 0.0L;
  for (std::uint64_t j = k; j <= n; ++j) {
    const auto jl = static_cast<long double>(j);
    const auto rest = static_cast<long double>(n - j);
    sum += std::exp(lgn - std::lgamma(jl + 1.0L) - std::lgamma(rest + 1.0L) + jl * lp + rest * lq);
  }
  return sum;
}

// Smallest p whose upper tail reaches alpha = 1 - confidence, by bisection.
inline double clopper_pearson_lower_oracle(std::uint64_t k, std::uint64_t n, double confidence) {
  if (k == 0) return 0.0;
  const long double alpha = 1.0L - static_cast<long double>(confidence);
  long double lo = 0.0L, hi = 1.0L;
  for (int it = 0; it < 80; ++it) {
    const long double mid = 0.5L * (lo + hi);
    if (binomial_upper_tail(k, n, mid) >= alpha) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return static_cast<double>(0.5L * (lo + hi));
}

// Phi by bisection-free series: erfc in long double.
inline long double phi_ref(long double z) { return 0.5L * std::erfc(-z / std::sqrt(2.0L)); }

// Phi^-1 by bisection on phi_ref. Upper quantiles go through the exact
// complement 1 - p so the tail keeps full relative precision.
inline double phi_inv_ref(double p) {
  if (p > 0.5) return -phi_inv_ref(1.0 - p);
  long double lo = -40.0L, hi = 40.0L;
  for (int it = 0; it < 200; ++it) {
    const long double mid = 0.5L * (lo + hi);
    if (phi_ref(mid) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return static_cast<double>(0.5L * (lo + hi));
}

class ConstantClassifier final : public BaseClassifier {
 public:
  ConstantClassifier(std::size_t label, std::size_t classes, std::size_t dim)
      : label_(label), classes_(classes), dim_(dim) {}
  std::size_t num_classes() const override { return classes_; }
  std::size_t input_dim() const override { return dim_; }
  Label classify(std::span<const double>) const override { return Label{label_}; }

 private:
  std::size_t label_, classes_, dim_;
};

}  // namespace ars::testing
