#pragma once

#include <cstdint>

namespace ars {

// One-sided Clopper-Pearson lower bound on a binomial success probability:
// with probability >= `confidence` the true p is at least the returned value.
// Solved by bisection on the regularized incomplete beta function
// I_p(k, n - k + 1) = P[Binomial(n, p) >= k]. Returns 0 for k == 0.
double lower_conf_bound(std::uint64_t k, std::uint64_t n, double confidence);

// Two-sided exact binomial test of H0: success probability == p. Sums the
// probability of every outcome no more likely than k (relative slack 1e-7).
double binom_p_value(std::uint64_t k, std::uint64_t n, double p);

}  // namespace ars
