#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ars {

enum class ErrorCode {
  DimensionMismatch,
  NonPositiveScale,
  NonFiniteEntry,
  NonFiniteInput,
  OutOfDomain,
  OutOfRange,
  InvalidBounds,
  BelowHalf,
  ZeroWeight,
  InvalidLabel,
  InvalidConfig,
  DivergenceDetected,
  ConfigError,
  EmptyReport,
  MismatchedTestSets,
  ParseError,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Dense real vector that is never empty and never holds NaN/Inf.
class Vector {
 public:
  explicit Vector(std::vector<double> entries);
  Vector(std::initializer_list<double> entries) : Vector(std::vector<double>(entries)) {}

  static Vector filled(std::size_t dim, double value);

  std::size_t dim() const noexcept { return entries_.size(); }
  double operator[](std::size_t i) const { return entries_[i]; }
  std::span<const double> values() const noexcept { return entries_; }
  const std::vector<double>& raw() const noexcept { return entries_; }

  auto begin() const noexcept { return entries_.begin(); }
  auto end() const noexcept { return entries_.end(); }

  friend bool operator==(const Vector&, const Vector&) = default;

 private:
  std::vector<double> entries_;
};

struct Label {
  std::size_t index = 0;

  // Throws InvalidLabel unless index < num_classes and num_classes >= 2.
  static Label checked(std::size_t index, std::size_t num_classes);

  friend auto operator<=>(const Label&, const Label&) = default;
};

enum class NoiseFamily { Gaussian, Laplace };
enum class Norm { L1, L2 };

const char* to_string(NoiseFamily family);
NoiseFamily parse_noise_family(const std::string& name);

// Per-dimension noise law. For Gaussian, scale holds standard deviations
// (Sigma = diag(scale^2)); for Laplace, scale holds the diversity lambda_i.
class NoiseSpec {
 public:
  NoiseSpec(NoiseFamily family, Vector mean, Vector scale);

  static NoiseSpec isotropic(NoiseFamily family, std::size_t dim, double scale);

  NoiseFamily family() const noexcept { return family_; }
  const Vector& mean() const noexcept { return mean_; }
  const Vector& scale() const noexcept { return scale_; }
  std::size_t dim() const noexcept { return mean_.dim(); }
  double min_scale() const noexcept { return min_scale_; }

 private:
  NoiseFamily family_;
  Vector mean_;
  Vector scale_;
  double min_scale_;
};

// Checks a spec against the input it will perturb.
void validate_noise_spec(const NoiseSpec& spec, std::size_t input_dim);

struct CertifyConfig {
  std::size_t n0 = 100;
  std::size_t n = 100000;
  double confidence_alpha = 0.001;
  std::size_t batch_size = 1000;
  std::uint64_t seed = 0;
  std::size_t workers = 1;

  void validate() const;
};

enum class CertifyStatus { Certified, Abstain };

struct CertifyOutcome {
  CertifyStatus status = CertifyStatus::Abstain;
  std::optional<Label> label;
  std::optional<double> radius;
  std::optional<double> pa_lower;
  Norm norm = Norm::L2;

  static CertifyOutcome abstain(Norm norm) { return CertifyOutcome{CertifyStatus::Abstain, {}, {}, {}, norm}; }
  bool certified() const noexcept { return status == CertifyStatus::Certified; }

  friend bool operator==(const CertifyOutcome&, const CertifyOutcome&) = default;
};

// Probabilities entering quantile or log transforms are clamped here.
inline constexpr double kProbabilityFloor = 1e-12;
double clamp_probability(double p) noexcept;

}  // namespace ars
