#include "ars/binomial.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/beta.hpp>

#include "ars/core.hpp"

namespace ars {
namespace {

double log_binom_pmf(std::uint64_t i, std::uint64_t n, double log_p, double log_q) {
  const auto di = static_cast<double>(i);
  const auto dn = static_cast<double>(n);
  return std::lgamma(dn + 1.0) - std::lgamma(di + 1.0) - std::lgamma(dn - di + 1.0) + di * log_p +
         (dn - di) * log_q;
}

}  // namespace

double lower_conf_bound(std::uint64_t k, std::uint64_t n, double confidence) {
  if (n == 0 || k > n) throw Error(ErrorCode::OutOfRange, "lower_conf_bound needs 0 <= k <= n, n >= 1");
  if (!(confidence > 0.0 && confidence < 1.0)) throw Error(ErrorCode::OutOfRange, "confidence must lie in (0, 1)");
  if (k == 0) return 0.0;

  const double alpha = 1.0 - confidence;
  const auto a = static_cast<double>(k);
  const auto b = static_cast<double>(n - k + 1);
  // I_p(a, b) is increasing in p; find the smallest p with I_p >= alpha.
  double lo = 0.0;
  double hi = 1.0;
  for (int iter = 0; iter < 200 && hi - lo > 0.0; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (boost::math::ibeta(a, b, mid) >= alpha) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return lo;
}

double binom_p_value(std::uint64_t k, std::uint64_t n, double p) {
  if (k > n) throw Error(ErrorCode::OutOfRange, "binom_p_value needs k <= n");
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::OutOfRange, "binom_p_value needs p in (0, 1)");
  if (n == 0) return 1.0;

  const double log_p = std::log(p);
  const double log_q = std::log1p(-p);
  const double threshold = log_binom_pmf(k, n, log_p, log_q) + std::log1p(1e-7);
  double total = 0.0;
  for (std::uint64_t i = 0; i <= n; ++i) {
    const double lp = log_binom_pmf(i, n, log_p, log_q);
    if (lp <= threshold) total += std::exp(lp);
  }
  return std::min(total, 1.0);
}

}  // namespace ars
