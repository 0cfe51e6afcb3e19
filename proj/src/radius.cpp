#include "ars/radius.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ars/noise.hpp"

namespace ars {
namespace {

double checked_min_scale(std::span<const double> scale) {
  if (scale.empty()) throw Error(ErrorCode::DimensionMismatch, "scale vector is empty");
  const double m = *std::min_element(scale.begin(), scale.end());
  if (!(m > 0.0) || !std::isfinite(m)) throw Error(ErrorCode::NonPositiveScale, "every scale entry must be > 0");
  return m;
}

double quantile_gap(const ProbabilityBounds& bounds) {
  bounds.validate();
  if (bounds.pa_lower == bounds.pb_upper) return 0.0;
  return std_normal_quantile(clamp_probability(bounds.pa_lower)) -
         std_normal_quantile(clamp_probability(bounds.pb_upper));
}

}  // namespace

void ProbabilityBounds::validate() const {
  if (!(pb_upper >= 0.0 && pa_lower <= 1.0 && pb_upper <= pa_lower)) {
    throw Error(ErrorCode::InvalidBounds, "need 0 <= pb_upper <= pa_lower <= 1, got pa_lower=" +
                                              std::to_string(pa_lower) + " pb_upper=" + std::to_string(pb_upper));
  }
}

double radius_iso_gaussian(double sigma, const ProbabilityBounds& bounds) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw Error(ErrorCode::NonPositiveScale, "sigma must be > 0");
  return 0.5 * sigma * quantile_gap(bounds);
}

double radius_aniso_gaussian(std::span<const double> scale, const ProbabilityBounds& bounds) {
  const double min_scale = checked_min_scale(scale);
  return 0.5 * min_scale * quantile_gap(bounds);
}

double radius_binary_gaussian(std::span<const double> scale, double pa_lower) {
  const double min_scale = checked_min_scale(scale);
  if (!(pa_lower >= 0.5)) throw Error(ErrorCode::BelowHalf, "binary radius needs pa_lower >= 1/2");
  if (pa_lower > 1.0) throw Error(ErrorCode::InvalidBounds, "pa_lower > 1");
  if (pa_lower == 0.5) return 0.0;
  return min_scale * std_normal_quantile(clamp_probability(pa_lower));
}

double radius_aniso_laplace(std::span<const double> scale, const ProbabilityBounds& bounds) {
  const double min_scale = checked_min_scale(scale);
  bounds.validate();
  if (bounds.pa_lower == bounds.pb_upper) return 0.0;
  const double pa = clamp_probability(bounds.pa_lower);
  const double pb = clamp_probability(bounds.pb_upper);
  const double ratio_branch = 0.5 * min_scale * std::log(pa / pb);
  const double mass_branch = -min_scale * std::log1p(pb - pa);
  return std::max({ratio_branch, mass_branch, 0.0});
}

}  // namespace ars
