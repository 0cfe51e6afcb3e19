#include "ars/certify.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "ars/binomial.hpp"
#include "ars/noise.hpp"
#include "ars/radius.hpp"

namespace ars {
namespace {

constexpr std::uint64_t kSelectionStream = 0;
constexpr std::uint64_t kEstimationStream = 1;

}  // namespace

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::DimensionMismatch, "argmax of empty range");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

std::size_t MonteCarloCounts::top() const { return top_two().first; }

std::pair<std::size_t, std::size_t> MonteCarloCounts::top_two() const {
  if (counts.size() < 2) throw Error(ErrorCode::InvalidLabel, "need at least two classes");
  std::size_t first = 0;
  for (std::size_t c = 1; c < counts.size(); ++c) {
    if (counts[c] > counts[first]) first = c;
  }
  std::size_t second = first == 0 ? 1 : 0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (c != first && counts[c] > counts[second]) second = c;
  }
  return {first, second};
}

void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& body) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

MonteCarloCounts classify_samples(const BaseClassifier& f, const Vector& x, const NoiseSpec& spec,
                                  std::uint64_t num, const RandomStream& stream, std::size_t workers,
                                  std::size_t batch_size) {
  validate_noise_spec(spec, x.dim());
  if (f.input_dim() != x.dim()) throw Error(ErrorCode::DimensionMismatch, "classifier input dim != x dim");
  batch_size = std::max<std::size_t>(1, batch_size);
  const std::size_t num_batches = (num + batch_size - 1) / batch_size;
  const std::size_t k = f.num_classes();

  // Per-batch tallies merged in batch order; integer sums are associative so
  // the result does not depend on scheduling.
  std::vector<std::vector<std::uint64_t>> partial(num_batches, std::vector<std::uint64_t>(k, 0));
  parallel_for(num_batches, workers, [&](std::size_t b) {
    std::vector<double> point(x.dim());
    const std::uint64_t begin = b * batch_size;
    const std::uint64_t end = std::min<std::uint64_t>(num, begin + batch_size);
    for (std::uint64_t j = begin; j < end; ++j) {
      RandomStream draw = stream.fork(j);
      sample_into(spec, draw, point);
      for (std::size_t i = 0; i < point.size(); ++i) point[i] += x[i];
      const Label label = f.classify(point);
      if (label.index >= k) throw Error(ErrorCode::InvalidLabel, "classifier returned out-of-range label");
      ++partial[b][label.index];
    }
  });

  MonteCarloCounts out{std::vector<std::uint64_t>(k, 0), num};
  for (const auto& tally : partial) {
    for (std::size_t c = 0; c < k; ++c) out.counts[c] += tally[c];
  }
  return out;
}

Prediction predict(const BaseClassifier& f, const Vector& x, const NoiseSpec& spec, std::uint64_t n,
                   double confidence_alpha, const RandomStream& stream, std::size_t workers) {
  if (n < 1) throw Error(ErrorCode::ConfigError, "n must be >= 1");
  if (!(confidence_alpha > 0.0 && confidence_alpha < 1.0)) {
    throw Error(ErrorCode::ConfigError, "confidence_alpha must lie in (0, 1)");
  }
  Prediction out;
  out.counts = classify_samples(f, x, spec, n, stream, workers);
  const auto [top, second] = out.counts.top_two();
  const std::uint64_t n_a = out.counts.counts[top];
  const std::uint64_t n_b = out.counts.counts[second];
  out.p_value = binom_p_value(n_a, n_a + n_b, 0.5);
  if (out.p_value <= confidence_alpha) out.label = Label{top};
  return out;
}

CertifyOutcome certify(const BaseClassifier& f, const Vector& x, const NoiseSpec& spec, const CertifyConfig& cfg,
                       const RandomStream& stream) {
  cfg.validate();
  const Norm norm = spec.family() == NoiseFamily::Gaussian ? Norm::L2 : Norm::L1;

  const auto selection = classify_samples(f, x, spec, cfg.n0, stream.fork(kSelectionStream), cfg.workers,
                                          cfg.batch_size);
  const std::size_t top = selection.top();
  const auto estimation = classify_samples(f, x, spec, cfg.n, stream.fork(kEstimationStream), cfg.workers,
                                           cfg.batch_size);
  const double pa_lower = lower_conf_bound(estimation.counts[top], cfg.n, 1.0 - cfg.confidence_alpha);
  if (!(pa_lower > 0.5)) return CertifyOutcome::abstain(norm);

  const double reported = clamp_probability(pa_lower);
  double radius = 0.0;
  if (spec.family() == NoiseFamily::Gaussian) {
    radius = radius_binary_gaussian(spec.scale().values(), reported);
  } else {
    radius = radius_aniso_laplace(spec.scale().values(), ProbabilityBounds{reported, 1.0 - reported});
  }
  return CertifyOutcome{CertifyStatus::Certified, Label{top}, radius, reported, norm};
}

}  // namespace ars
