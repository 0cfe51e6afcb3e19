#include "ars/noise.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace ars {
namespace {

// Rational approximation of the normal quantile (P. J. Acklam), relative
// error ~1.15e-9; refined below with a Halley step against erfc.
double acklam_quantile(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

double lower_tail_quantile(double p) {
  double x = acklam_quantile(p);
  for (int i = 0; i < 2; ++i) {
    const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
  }
  return x;
}

}  // namespace

double std_normal_cdf(double z) {
  if (!std::isfinite(z)) throw Error(ErrorCode::NonFiniteInput, "std_normal_cdf argument must be finite");
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double std_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::OutOfDomain, "std_normal_quantile needs p in (0, 1)");
  if (p == 0.5) return 0.0;
  // Refine in the lower tail where erfc keeps relative precision; 1 - p is
  // exact for p >= 0.5.
  return p < 0.5 ? lower_tail_quantile(p) : -lower_tail_quantile(1.0 - p);
}

double standard_draw(NoiseFamily family, RandomStream& stream) {
  const double u = stream.uniform();
  if (family == NoiseFamily::Gaussian) return std_normal_quantile(u);
  // Laplace(0, 1) inverse CDF.
  return u < 0.5 ? std::log(2.0 * u) : -std::log(2.0 * (1.0 - u));
}

void sample_into(const NoiseSpec& spec, RandomStream& stream, std::span<double> out) {
  if (out.size() != spec.dim()) throw Error(ErrorCode::DimensionMismatch, "sample output has wrong dim");
  const auto mean = spec.mean().values();
  const auto scale = spec.scale().values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = mean[i] + scale[i] * standard_draw(spec.family(), stream);
  }
}

Vector sample(const NoiseSpec& spec, RandomStream& stream) {
  std::vector<double> out(spec.dim());
  sample_into(spec, stream, out);
  return Vector(std::move(out));
}

}  // namespace ars
