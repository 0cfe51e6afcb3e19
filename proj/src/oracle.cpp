#include "ars/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ars/noise.hpp"
#include "ars/radius.hpp"
#include "ars/rng.hpp"

namespace ars::oracle {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

// ||delta / scale||_2, the Mahalanobis length of a shift under diag(scale^2).
double scaled_norm(std::span<const double> delta, std::span<const double> scale) {
  double acc = 0.0;
  for (std::size_t i = 0; i < delta.size(); ++i) acc += (delta[i] / scale[i]) * (delta[i] / scale[i]);
  return std::sqrt(acc);
}

void require_same_dim(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw Error(ErrorCode::DimensionMismatch, what);
}

void require_open_unit(double p, const char* what) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::OutOfDomain, what);
}

void require_positive(std::span<const double> scale) {
  for (double s : scale) {
    if (!(s > 0.0) || !std::isfinite(s)) throw Error(ErrorCode::OutOfDomain, "scale entries must be > 0");
  }
}

}  // namespace

LinearClassifier::LinearClassifier(Vector weight, double bias) : weight_(std::move(weight)), bias_(bias) {
  if (std::all_of(weight_.begin(), weight_.end(), [](double w) { return w == 0.0; })) {
    throw Error(ErrorCode::ZeroWeight, "linear classifier needs a nonzero weight");
  }
  if (!std::isfinite(bias_)) throw Error(ErrorCode::NonFiniteEntry, "bias must be finite");
}

double LinearClassifier::margin(std::span<const double> z) const {
  require_same_dim(z.size(), weight_.dim(), "input dim != weight dim");
  return dot(weight_.values(), z) - bias_;
}

Label LinearClassifier::classify(std::span<const double> z) const { return Label{margin(z) >= 0.0 ? 1u : 0u}; }

std::optional<std::vector<double>> LinearClassifier::scores(std::span<const double> z) const {
  const double m = margin(z);
  // Ties at m == 0 resolve to class 1, matching classify().
  return std::vector<double>{m >= 0.0 ? -std::abs(m) - 1.0 : 0.0, m >= 0.0 ? 0.0 : m};
}

double smoothed_prob_linear(const LinearClassifier& f, const Vector& x, const NoiseSpec& spec) {
  if (spec.family() != NoiseFamily::Gaussian) throw Error(ErrorCode::OutOfDomain, "closed form needs Gaussian noise");
  require_same_dim(x.dim(), f.input_dim(), "x dim != weight dim");
  validate_noise_spec(spec, x.dim());
  const auto w = f.weight().values();
  const auto mu = spec.mean().values();
  const auto s = spec.scale().values();
  double center = -f.bias();
  double var = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    center += w[i] * (x[i] + mu[i]);
    var += w[i] * w[i] * s[i] * s[i];
  }
  return std_normal_cdf(center / std::sqrt(var));
}

HalfSpaceOracle::HalfSpaceOracle(Vector base_point, NoiseSpec spec, double pa, Vector direction)
    : base_point_(std::move(base_point)),
      spec_(std::move(spec)),
      pa_(pa),
      direction_(std::move(direction)),
      threshold_(0.0),
      ratio_offset_(0.0),
      beta_(0.0) {
  if (spec_.family() != NoiseFamily::Gaussian) throw Error(ErrorCode::OutOfDomain, "half-space oracle is Gaussian");
  require_open_unit(pa_, "pa must lie in (0, 1)");
  validate_noise_spec(spec_, base_point_.dim());
  require_same_dim(direction_.dim(), base_point_.dim(), "direction dim != base point dim");
  const auto d = direction_.values();
  const auto s = spec_.scale().values();
  const auto mu = spec_.mean().values();
  const double len = scaled_norm(d, s);
  if (len == 0.0) throw Error(ErrorCode::ZeroWeight, "direction must be nonzero");
  threshold_ = len * std_normal_quantile(pa_);

  double offset = 0.0;
  double center_proj = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double center = base_point_[i] + mu[i];
    offset += (2.0 * center * d[i] + d[i] * d[i]) / (2.0 * s[i] * s[i]);
    center_proj += d[i] / (s[i] * s[i]) * center;
  }
  ratio_offset_ = offset;
  beta_ = threshold_ + center_proj;
}

double HalfSpaceOracle::likelihood_threshold() const { return std::exp(beta_ - ratio_offset_); }

bool HalfSpaceOracle::contains(std::span<const double> z) const {
  require_same_dim(z.size(), direction_.dim(), "z dim != oracle dim");
  const auto d = direction_.values();
  const auto s = spec_.scale().values();
  double proj = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) proj += d[i] / (s[i] * s[i]) * z[i];
  return proj <= beta_;
}

double HalfSpaceOracle::likelihood_ratio(std::span<const double> z) const {
  require_same_dim(z.size(), direction_.dim(), "z dim != oracle dim");
  const auto d = direction_.values();
  const auto s = spec_.scale().values();
  double proj = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) proj += d[i] / (s[i] * s[i]) * z[i];
  return std::exp(proj - ratio_offset_);
}

LinearClassifier HalfSpaceOracle::as_classifier() const {
  // z in A  <=>  -sum d_i/s_i^2 z_i >= -beta.
  const auto d = direction_.values();
  const auto s = spec_.scale().values();
  std::vector<double> w(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) w[i] = -d[i] / (s[i] * s[i]);
  return LinearClassifier(Vector(std::move(w)), -beta_);
}

double HalfSpaceOracle::probability_under_shift(std::span<const double> shift) const {
  require_same_dim(shift.size(), direction_.dim(), "shift dim != oracle dim");
  std::vector<double> shifted(base_point_.raw());
  for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] += shift[i];
  return smoothed_prob_linear(as_classifier(), Vector(std::move(shifted)), spec_);
}

double shifted_halfspace_prob(double pa, std::span<const double> delta, std::span<const double> scale) {
  require_open_unit(pa, "pa must lie in (0, 1)");
  require_same_dim(delta.size(), scale.size(), "delta dim != scale dim");
  require_positive(scale);
  return std_normal_cdf(std_normal_quantile(pa) - scaled_norm(delta, scale));
}

std::vector<std::vector<double>> unit_directions(std::size_t dim, std::size_t count, std::uint64_t seed) {
  std::vector<std::vector<double>> out;
  out.reserve(count);
  RandomStream stream(seed, dim);
  while (out.size() < count) {
    std::vector<double> u(dim);
    for (double& v : u) v = standard_draw(NoiseFamily::Gaussian, stream);
    const double len = std::sqrt(dot(u, u));
    if (len < 1e-12) continue;
    for (double& v : u) v /= len;
    out.push_back(std::move(u));
  }
  return out;
}

bool worst_case_flip_check(double pa, std::span<const double> scale, double margin) {
  if (!(pa > 0.5 && pa < 1.0)) throw Error(ErrorCode::OutOfDomain, "worst_case_flip_check needs pa in (1/2, 1)");
  if (!(margin > 0.0 && margin < 1.0)) throw Error(ErrorCode::OutOfDomain, "margin must lie in (0, 1)");
  require_positive(scale);
  const double radius = radius_binary_gaussian(scale, pa);

  std::vector<double> delta(scale.size());
  for (const auto& u : unit_directions(scale.size(), kDirectionCount, kDirectionSeed)) {
    for (std::size_t i = 0; i < u.size(); ++i) delta[i] = radius * (1.0 - margin) * u[i];
    if (!(shifted_halfspace_prob(pa, delta, scale) > 0.5)) return false;
  }

  const auto weakest = static_cast<std::size_t>(std::min_element(scale.begin(), scale.end()) - scale.begin());
  std::fill(delta.begin(), delta.end(), 0.0);
  delta[weakest] = radius * (1.0 + margin);
  return shifted_halfspace_prob(pa, delta, scale) <= 0.5;
}

double laplace_statistic(std::span<const double> z, std::span<const double> delta, std::span<const double> scale) {
  require_same_dim(z.size(), delta.size(), "z dim != delta dim");
  require_same_dim(z.size(), scale.size(), "z dim != scale dim");
  double t = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) t += (std::abs(z[i] - delta[i]) - std::abs(z[i])) / scale[i];
  return t;
}

LaplaceGuarantee laplace_guarantee(double pa, double pb, std::span<const double> delta,
                                   std::span<const double> scale) {
  require_same_dim(delta.size(), scale.size(), "delta dim != scale dim");
  require_positive(scale);
  double s = 0.0;
  for (std::size_t i = 0; i < delta.size(); ++i) s += std::abs(delta[i]) / scale[i];
  const double grow = std::exp(s);
  return LaplaceGuarantee{std::max(pa / grow, 1.0 - grow * (1.0 - pa)), grow * pb};
}

bool laplace_soundness_check(double pa, double pb, std::span<const double> scale) {
  ProbabilityBounds{pa, pb}.validate();
  require_positive(scale);
  const double radius = radius_aniso_laplace(scale, ProbabilityBounds{pa, pb});
  if (radius == 0.0) return true;
  const double pa_c = clamp_probability(pa);
  const double pb_c = clamp_probability(pb);
  const double reach = radius * (1.0 - 1e-6);

  auto holds_along = [&](std::vector<double> dir) {
    double l1 = 0.0;
    for (double v : dir) l1 += std::abs(v);
    for (double& v : dir) v *= reach / l1;
    return laplace_guarantee(pa_c, pb_c, dir, scale).holds();
  };
  for (auto& u : unit_directions(scale.size(), kDirectionCount, kDirectionSeed)) {
    if (!holds_along(std::move(u))) return false;
  }
  for (std::size_t axis = 0; axis < scale.size(); ++axis) {
    std::vector<double> e(scale.size(), 0.0);
    e[axis] = 1.0;
    if (!holds_along(std::move(e))) return false;
  }
  return true;
}

}  // namespace ars::oracle
