#include "ars/core.hpp"

#include <algorithm>
#include <cmath>

namespace ars {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonPositiveScale: return "NonPositiveScale";
    case ErrorCode::NonFiniteEntry: return "NonFiniteEntry";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::InvalidBounds: return "InvalidBounds";
    case ErrorCode::BelowHalf: return "BelowHalf";
    case ErrorCode::ZeroWeight: return "ZeroWeight";
    case ErrorCode::InvalidLabel: return "InvalidLabel";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::DivergenceDetected: return "DivergenceDetected";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::EmptyReport: return "EmptyReport";
    case ErrorCode::MismatchedTestSets: return "MismatchedTestSets";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

Vector::Vector(std::vector<double> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw Error(ErrorCode::DimensionMismatch, "vector must have dim >= 1");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!std::isfinite(entries_[i])) {
      throw Error(ErrorCode::NonFiniteEntry, "entry " + std::to_string(i) + " is not finite");
    }
  }
}

Vector Vector::filled(std::size_t dim, double value) { return Vector(std::vector<double>(dim, value)); }

Label Label::checked(std::size_t index, std::size_t num_classes) {
  if (num_classes < 2) throw Error(ErrorCode::InvalidLabel, "num_classes must be >= 2");
  if (index >= num_classes) {
    throw Error(ErrorCode::InvalidLabel,
                "label " + std::to_string(index) + " >= num_classes " + std::to_string(num_classes));
  }
  return Label{index};
}

const char* to_string(NoiseFamily family) {
  return family == NoiseFamily::Gaussian ? "gaussian" : "laplace";
}

NoiseFamily parse_noise_family(const std::string& name) {
  if (name == "gaussian") return NoiseFamily::Gaussian;
  if (name == "laplace") return NoiseFamily::Laplace;
  throw Error(ErrorCode::ConfigError, "unknown noise family '" + name + "'");
}

NoiseSpec::NoiseSpec(NoiseFamily family, Vector mean, Vector scale)
    : family_(family), mean_(std::move(mean)), scale_(std::move(scale)) {
  if (mean_.dim() != scale_.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "mean dim " + std::to_string(mean_.dim()) +
                                                  " != scale dim " + std::to_string(scale_.dim()));
  }
  min_scale_ = *std::min_element(scale_.begin(), scale_.end());
  if (!(min_scale_ > 0.0)) throw Error(ErrorCode::NonPositiveScale, "every scale entry must be > 0");
}

NoiseSpec NoiseSpec::isotropic(NoiseFamily family, std::size_t dim, double scale) {
  return NoiseSpec(family, Vector::filled(dim, 0.0), Vector::filled(dim, scale));
}

void validate_noise_spec(const NoiseSpec& spec, std::size_t input_dim) {
  // Finiteness and positivity are enforced when a NoiseSpec is built; the only
  // thing left to check against a concrete input is the dimension.
  if (spec.dim() != input_dim) {
    throw Error(ErrorCode::DimensionMismatch, "noise dim " + std::to_string(spec.dim()) +
                                                  " != input dim " + std::to_string(input_dim));
  }
}

void CertifyConfig::validate() const {
  if (n0 < 1) throw Error(ErrorCode::ConfigError, "n0 must be >= 1");
  if (n < n0) throw Error(ErrorCode::ConfigError, "n must be >= n0");
  if (!(confidence_alpha > 0.0 && confidence_alpha < 1.0)) {
    throw Error(ErrorCode::ConfigError, "confidence_alpha must lie in (0, 1)");
  }
  if (batch_size < 1) throw Error(ErrorCode::ConfigError, "batch_size must be >= 1");
  if (workers < 1) throw Error(ErrorCode::ConfigError, "workers must be >= 1");
}

double clamp_probability(double p) noexcept {
  return std::clamp(p, kProbabilityFloor, 1.0 - kProbabilityFloor);
}

}  // namespace ars
