#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "ars/autodiff.hpp"
#include "ars/certify.hpp"
#include "ars/core.hpp"
#include "ars/rng.hpp"

namespace ars::net {

inline constexpr double kLeakySlope = 0.01;

struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weight;  // row-major out x in
  std::vector<double> bias;
};

// Fully connected network with leaky-ReLU between layers. The final layer is
// linear unless `activate_last` is set (used for the generator trunk).
class Mlp {
 public:
  Mlp(std::vector<std::size_t> layer_dims, bool activate_last = false);

  // He-style initialisation from a counter-based stream.
  static Mlp random(std::vector<std::size_t> layer_dims, std::uint64_t seed, bool activate_last = false);

  const std::vector<std::size_t>& layer_dims() const noexcept { return dims_; }
  bool activate_last() const noexcept { return activate_last_; }
  std::size_t input_dim() const noexcept { return dims_.front(); }
  std::size_t output_dim() const noexcept { return dims_.back(); }
  std::vector<DenseLayer>& layers() noexcept { return layers_; }
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }

  std::size_t parameter_count() const;
  // Layer by layer: weight (row-major) then bias.
  std::vector<double> flat_parameters() const;
  void set_flat_parameters(std::span<const double> flat);

  std::vector<double> forward(std::span<const double> x) const;

  // Tape leaves for every layer's weight and bias, in flat order.
  std::vector<Var> bind(Tape& tape) const;
  Var forward(Tape& tape, std::span<const Var> params, Var x) const;
  static std::vector<double> collect_gradients(const Tape& tape, std::span<const Var> params);

 private:
  std::vector<std::size_t> dims_;
  bool activate_last_;
  std::vector<DenseLayer> layers_;
};

// Scores of f at x. Throws DimensionMismatch when x has the wrong size.
std::vector<double> forward_scores(const Mlp& f, std::span<const double> x);
std::vector<double> softmax(std::span<const double> scores);

// Adapts an Mlp to the certifier's classifier interface.
class MlpClassifier final : public BaseClassifier {
 public:
  explicit MlpClassifier(const Mlp& net) : net_(net) {}
  std::size_t num_classes() const override { return net_.output_dim(); }
  std::size_t input_dim() const override { return net_.input_dim(); }
  Label classify(std::span<const double> input) const override;
  std::optional<std::vector<double>> scores(std::span<const double> input) const override;

 private:
  const Mlp& net_;
};

struct NoiseParams {
  std::vector<double> mean;
  std::vector<double> scale;
};

// Two-headed noise generator: an activated trunk followed by a mean head
// mapped into [-mean_bound, mean_bound] and a scale head mapped into
// [scale_lo, scale_hi], both through a sigmoid.
class NoiseGenNet {
 public:
  NoiseGenNet(Mlp trunk, DenseLayer mean_head, DenseLayer scale_head, double mean_bound, double scale_lo,
              double scale_hi);

  // Trunk of `depth` hidden layers of width `hidden`. Head weights start
  // small and the scale-head bias is set so the initial scale is close to
  // `initial_scale`; the initial mean is close to zero.
  static NoiseGenNet random(std::size_t input_dim, std::size_t hidden, std::size_t depth, double mean_bound,
                            double scale_lo, double scale_hi, double initial_scale, std::uint64_t seed);

  std::size_t input_dim() const noexcept { return trunk_.input_dim(); }
  double mean_bound() const noexcept { return mean_bound_; }
  double scale_lo() const noexcept { return scale_lo_; }
  double scale_hi() const noexcept { return scale_hi_; }
  const Mlp& trunk() const noexcept { return trunk_; }
  const DenseLayer& mean_head() const noexcept { return mean_head_; }
  const DenseLayer& scale_head() const noexcept { return scale_head_; }

  std::size_t parameter_count() const;
  // Trunk, then mean head (weight, bias), then scale head (weight, bias).
  std::vector<double> flat_parameters() const;
  void set_flat_parameters(std::span<const double> flat);

  NoiseParams forward(std::span<const double> x) const;
  NoiseSpec noise_spec(const Vector& x, NoiseFamily family = NoiseFamily::Gaussian) const;

  std::vector<Var> bind(Tape& tape) const;
  std::pair<Var, Var> forward(Tape& tape, std::span<const Var> params, Var x) const;

 private:
  Mlp trunk_;
  DenseLayer mean_head_;
  DenseLayer scale_head_;
  double mean_bound_;
  double scale_lo_;
  double scale_hi_;
};

struct LossWeights {
  double smoothing = 1.0;  // ws
  double variance = 1.0;   // wv
  double mean = 0.01;      // wm
};

struct TrainConfig {
  LossWeights loss_weights;
  double sigma_target = 0.5;
  // Isotropic noise level used when training without a generator.
  double fixed_sigma = 0.5;
  std::size_t samples_per_input = 5;
  double learning_rate = 0.05;
  std::size_t epochs = 30;
  std::size_t batch = 32;
  std::uint64_t seed = 0;

  // Throws InvalidConfig; the generator is used to check sigma_target.
  void validate(const NoiseGenNet* generator) const;
};

struct Example {
  std::span<const double> x;
  Label y;
};

// Cross-entropy of f at x + eps averaged over `samples` reparameterised draws
// eps = mu(x) + sigma(x) * xi; draw s uses stream.fork(s).
double smoothing_loss(const Mlp& f, const NoiseGenNet& g, std::span<const double> x, Label y, std::size_t samples,
                      const RandomStream& stream);
// Same loss for fixed isotropic Gaussian noise N(0, sigma^2 I).
double smoothing_loss_isotropic(const Mlp& f, double sigma, std::span<const double> x, Label y, std::size_t samples,
                                const RandomStream& stream);

// |min_i sigma_i(x) - sigma_target| / sigma_target.
double variance_loss(const NoiseGenNet& g, std::span<const double> x, double sigma_target);
// ||mu(x)||_2.
double mean_loss(const NoiseGenNet& g, std::span<const double> x);

struct LossBreakdown {
  double total = 0.0;
  double smoothing = 0.0;  // batch means of each term
  double variance = 0.0;
  double mean = 0.0;
  std::vector<double> grad_classifier;
  std::vector<double> grad_generator;  // empty without a generator
};

// Batch-mean weighted objective and exact reverse-mode gradients for both
// networks. Example i of the batch draws its noise from stream.fork(i).
// Without a generator only the smoothing term with cfg.fixed_sigma is used.
LossBreakdown total_loss_and_grads(const Mlp& f, const NoiseGenNet* g, std::span<const Example> batch,
                                   const TrainConfig& cfg, const RandomStream& stream);

struct TrainTrace {
  std::vector<double> epoch_total;
  std::vector<double> epoch_smoothing;
  std::vector<double> epoch_variance;
  std::vector<double> epoch_mean;
};

// Plain minibatch SGD on both networks (classifier only when g is null).
// Throws DivergenceDetected if a loss or parameter becomes non-finite.
TrainTrace train(Mlp& f, NoiseGenNet* g, std::span<const Example> data, const TrainConfig& cfg);

// l_inf PGD on the clean classifier: `iters` signed-gradient ascent steps on
// the cross-entropy of label y, each projected back onto the eps ball around
// x and the [lo, hi] box.
std::vector<double> pgd_attack(const Mlp& f, std::span<const double> x, Label y, double eps_inf, std::size_t iters,
                               double step, std::pair<double, double> clip);

}  // namespace ars::net
