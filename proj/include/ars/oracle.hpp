#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ars/certify.hpp"
#include "ars/core.hpp"

// Analytic ground truth for Gaussian and Laplace smoothing: worst-case
// half-space classifiers, their exact smoothed probabilities, and the
// soundness/tightness checks built on them.
namespace ars::oracle {

// Two-class linear classifier: class 1 iff weight . z >= bias.
class LinearClassifier final : public BaseClassifier {
 public:
  LinearClassifier(Vector weight, double bias);

  const Vector& weight() const noexcept { return weight_; }
  double bias() const noexcept { return bias_; }
  double margin(std::span<const double> z) const;

  std::size_t num_classes() const override { return 2; }
  std::size_t input_dim() const override { return weight_.dim(); }
  Label classify(std::span<const double> z) const override;
  std::optional<std::vector<double>> scores(std::span<const double> z) const override;

 private:
  Vector weight_;
  double bias_;
};

// Exact P[f(x + eps) = 1] for eps ~ N(mu, diag(scale^2)):
// Phi((w.(x + mu) - b) / sqrt(sum w_i^2 sigma_i^2)).
double smoothed_prob_linear(const LinearClassifier& f, const Vector& x, const NoiseSpec& spec);

// The Neyman-Pearson worst-case set for a Gaussian shift `direction`:
//   A = { z : sum_i d_i / s_i^2 (z_i - mu_i - x_i) <= ||d / s||_2 * Phi^-1(pa) }.
// The likelihood-ratio bookkeeping (c, beta, t) identifies A with
// { z : f_Y(z) / f_X(z) <= t } for Y shifted by `direction`.
class HalfSpaceOracle {
 public:
  HalfSpaceOracle(Vector base_point, NoiseSpec spec, double pa, Vector direction);

  const Vector& base_point() const noexcept { return base_point_; }
  const NoiseSpec& spec() const noexcept { return spec_; }
  double pa() const noexcept { return pa_; }
  const Vector& direction() const noexcept { return direction_; }
  // Right-hand side ||d / s||_2 * Phi^-1(pa).
  double threshold() const noexcept { return threshold_; }
  // Constant c of the log-likelihood ratio sum_i d_i z_i / s_i^2 - c.
  double ratio_offset() const noexcept { return ratio_offset_; }
  // beta = log t + c, the threshold on sum_i d_i z_i / s_i^2.
  double beta() const noexcept { return beta_; }
  double likelihood_threshold() const;

  bool contains(std::span<const double> z) const;
  double likelihood_ratio(std::span<const double> z) const;

  // The set A as a two-class linear classifier (class 1 <=> z in A).
  LinearClassifier as_classifier() const;

  // Exact P[z in A] for z ~ N(base + mu + shift, Sigma).
  double probability_under_shift(std::span<const double> shift) const;

 private:
  Vector base_point_;
  NoiseSpec spec_;
  double pa_;
  Vector direction_;
  double threshold_;
  double ratio_offset_;
  double beta_;
};

// P[Y in A] = Phi(Phi^-1(pa) - ||delta / scale||_2) for the worst-case set
// calibrated to pa.
double shifted_halfspace_prob(double pa, std::span<const double> delta, std::span<const double> scale);

// Deterministic quasi-uniform unit directions (normalised Gaussian draws).
std::vector<std::vector<double>> unit_directions(std::size_t dim, std::size_t count, std::uint64_t seed);

inline constexpr std::size_t kDirectionCount = 64;
inline constexpr std::uint64_t kDirectionSeed = 0x5eed0fd1ec7u;

// Soundness and tightness of the binary Gaussian radius R = min(s) Phi^-1(pa):
// every direction at R(1 - margin) keeps the worst case above 1/2 and the
// minimum-scale axis at R(1 + margin) drops it to <= 1/2.
bool worst_case_flip_check(double pa, std::span<const double> scale, double margin);

// T(z) = sum_i (|z_i - delta_i| - |z_i|) / lambda_i.
double laplace_statistic(std::span<const double> z, std::span<const double> delta, std::span<const double> scale);

struct LaplaceGuarantee {
  double pa_lower_bound;  // max(e^{-s} pa, 1 - e^{s} (1 - pa))
  double pb_upper_bound;  // e^{s} pb
  bool holds() const noexcept { return pa_lower_bound > pb_upper_bound; }
};

// Guaranteed bounds on the shifted class probabilities for perturbation
// delta, with s = sum_i |delta_i| / lambda_i.
LaplaceGuarantee laplace_guarantee(double pa, double pb, std::span<const double> delta, std::span<const double> scale);

// Checks both Laplace branch conditions at ||delta||_1 = R(1 - 1e-6) along
// 64 directions plus every coordinate axis. Vacuously true when R == 0.
bool laplace_soundness_check(double pa, double pb, std::span<const double> scale);

}  // namespace ars::oracle
