#pragma once

#include <span>

#include "ars/core.hpp"

namespace ars {

// Lower bound on the top-class probability and upper bound on the runner-up.
struct ProbabilityBounds {
  double pa_lower = 0.5;
  double pb_upper = 0.5;

  // Throws InvalidBounds unless 0 <= pb_upper <= pa_lower <= 1.
  void validate() const;
};

// Closed-form certified radii. Probabilities are clamped into
// [kProbabilityFloor, 1 - kProbabilityFloor] before Phi^-1 / log, so every
// radius is finite. None of these depend on the noise mean.

// l2 radius for N(0, sigma^2 I): sigma/2 * (Phi^-1(pa) - Phi^-1(pb)).
double radius_iso_gaussian(double sigma, const ProbabilityBounds& bounds);

// l2 radius for N(mu, diag(scale^2)): min(scale)/2 * (Phi^-1(pa) - Phi^-1(pb)).
double radius_aniso_gaussian(std::span<const double> scale, const ProbabilityBounds& bounds);

// Two-class l2 radius: min(scale) * Phi^-1(pa). Throws BelowHalf if pa < 1/2.
double radius_binary_gaussian(std::span<const double> scale, double pa_lower);

// l1 radius for anisotropic Laplace noise with diversities `scale`:
// max(min(scale)/2 * log(pa/pb), -min(scale) * log(1 - pa + pb)).
double radius_aniso_laplace(std::span<const double> scale, const ProbabilityBounds& bounds);

}  // namespace ars
