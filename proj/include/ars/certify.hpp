#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "ars/core.hpp"
#include "ars/rng.hpp"

namespace ars {

// Deterministic base classifier f. classify() must be safe to call
// concurrently and free of side effects.
class BaseClassifier {
 public:
  virtual ~BaseClassifier() = default;

  virtual std::size_t num_classes() const = 0;
  virtual std::size_t input_dim() const = 0;
  virtual Label classify(std::span<const double> input) const = 0;
  // Optional per-class scores; classify() must equal their argmax (lowest
  // index on ties) when provided.
  virtual std::optional<std::vector<double>> scores(std::span<const double>) const { return std::nullopt; }
};

// Index of the largest entry, lowest index on ties.
std::size_t argmax(std::span<const double> values);

struct MonteCarloCounts {
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;

  // Top class (lowest index on ties).
  std::size_t top() const;
  // Top two distinct classes (lowest index on ties).
  std::pair<std::size_t, std::size_t> top_two() const;

  friend bool operator==(const MonteCarloCounts&, const MonteCarloCounts&) = default;
};

// Runs body(i) for i in [0, count) on `workers` threads. Each i runs exactly
// once; callers write results into per-index slots.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& body);

// Tallies f(x + eps) over `num` draws. Draw j uses stream.fork(j), so counts
// are identical for every worker count.
MonteCarloCounts classify_samples(const BaseClassifier& f, const Vector& x, const NoiseSpec& spec,
                                  std::uint64_t num, const RandomStream& stream, std::size_t workers = 1,
                                  std::size_t batch_size = 1000);

struct Prediction {
  std::optional<Label> label;  // nullopt means abstain
  double p_value = 1.0;
  MonteCarloCounts counts;
};

// Binomial-test prediction: returns the top class iff the two-sided test of
// n_A against n_A + n_B at p = 1/2 has p-value <= alpha.
Prediction predict(const BaseClassifier& f, const Vector& x, const NoiseSpec& spec, std::uint64_t n,
                   double confidence_alpha, const RandomStream& stream, std::size_t workers = 1);

// Clopper-Pearson certification. Selection (n0 draws) and estimation (n
// draws) use disjoint forks of `stream`. Gaussian noise yields an l2 radius
// min(scale) * Phi^-1(pa_lower); Laplace yields the l1 radius with
// pb_upper = 1 - pa_lower.
CertifyOutcome certify(const BaseClassifier& f, const Vector& x, const NoiseSpec& spec, const CertifyConfig& cfg,
                       const RandomStream& stream);

}  // namespace ars
