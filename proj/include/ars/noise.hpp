#pragma once

#include <span>

#include "ars/core.hpp"
#include "ars/rng.hpp"

namespace ars {

// Standard normal CDF. Throws NonFiniteInput for NaN/Inf.
double std_normal_cdf(double z);

// Inverse of std_normal_cdf on (0, 1). Throws OutOfDomain outside it.
double std_normal_quantile(double p);

// One standard draw of the family (zero location, unit scale), by inverse CDF.
// Consumes exactly one uniform from the stream.
double standard_draw(NoiseFamily family, RandomStream& stream);

// Writes one draw of `spec` into `out` (dimension i is mean_i + scale_i * xi_i).
void sample_into(const NoiseSpec& spec, RandomStream& stream, std::span<double> out);

Vector sample(const NoiseSpec& spec, RandomStream& stream);

}  // namespace ars
