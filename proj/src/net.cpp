#include "ars/net.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ars/noise.hpp"

namespace ars::net {
namespace {

void dense_forward(const DenseLayer& layer, std::span<const double> in, std::vector<double>& out) {
  out.assign(layer.bias.begin(), layer.bias.end());
  for (std::size_t r = 0; r < layer.out; ++r) {
    const double* row = layer.weight.data() + r * layer.in;
    double acc = 0.0;
    for (std::size_t c = 0; c < layer.in; ++c) acc += row[c] * in[c];
    out[r] += acc;
  }
}

double sigmoid(double v) { return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v)); }

DenseLayer random_layer(std::size_t in, std::size_t out, double stddev, RandomStream& stream) {
  DenseLayer layer{in, out, std::vector<double>(in * out), std::vector<double>(out, 0.0)};
  for (double& w : layer.weight) w = stddev * standard_draw(NoiseFamily::Gaussian, stream);
  return layer;
}

void append(std::vector<double>& flat, const DenseLayer& layer) {
  flat.insert(flat.end(), layer.weight.begin(), layer.weight.end());
  flat.insert(flat.end(), layer.bias.begin(), layer.bias.end());
}

std::size_t assign(std::span<const double> flat, std::size_t at, DenseLayer& layer) {
  std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(at), layer.weight.size(), layer.weight.begin());
  at += layer.weight.size();
  std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(at), layer.bias.size(), layer.bias.begin());
  return at + layer.bias.size();
}

double cross_entropy(std::span<const double> scores, std::size_t label) {
  const double top = *std::max_element(scores.begin(), scores.end());
  double z = 0.0;
  for (double v : scores) z += std::exp(v - top);
  return top + std::log(z) - scores[label];
}

std::vector<double> standard_normal_vector(std::size_t dim, RandomStream stream) {
  std::vector<double> xi(dim);
  for (double& v : xi) v = standard_draw(NoiseFamily::Gaussian, stream);
  return xi;
}

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

// Per-example objective recorded on `tape`; returns (weighted total, Ls, Lv, Lm).
struct ExampleTerms {
  Var total;
  double smoothing;
  double variance;
  double mean;
};

ExampleTerms record_example(Tape& tape, const Mlp& f, std::span<const Var> f_params, const NoiseGenNet* g,
                            std::span<const Var> g_params, const Example& ex, const TrainConfig& cfg,
                            const RandomStream& stream) {
  const std::size_t dim = ex.x.size();
  const Var x = tape.leaf(ex.x);
  std::vector<Var> ce_terms;
  ce_terms.reserve(cfg.samples_per_input);

  std::optional<std::pair<Var, Var>> noise;
  if (g != nullptr) noise = g->forward(tape, g_params, x);

  for (std::size_t s = 0; s < cfg.samples_per_input; ++s) {
    const auto xi = standard_normal_vector(dim, stream.fork(s));
    Var eps;
    if (noise) {
      eps = tape.add(noise->first, tape.mul_const(noise->second, xi));
    } else {
      eps = tape.affine_const(tape.leaf(xi), cfg.fixed_sigma, 0.0);
    }
    const Var scores = f.forward(tape, f_params, tape.add(x, eps));
    ce_terms.push_back(tape.softmax_cross_entropy(scores, ex.y.index));
  }
  const std::vector<double> avg(ce_terms.size(), 1.0 / static_cast<double>(ce_terms.size()));
  const Var smoothing = tape.weighted_sum(ce_terms, avg);

  if (!noise) {
    const std::vector<Var> terms{smoothing};
    const std::vector<double> weights{cfg.loss_weights.smoothing};
    return {tape.weighted_sum(terms, weights), tape.scalar(smoothing), 0.0, 0.0};
  }
  const Var min_scale = tape.min_element(noise->second);
  const Var variance =
      tape.abs(tape.affine_const(min_scale, 1.0 / cfg.sigma_target, -1.0));
  const Var mean = tape.l2_norm(noise->first);
  const std::vector<Var> terms{smoothing, variance, mean};
  const std::vector<double> weights{cfg.loss_weights.smoothing, cfg.loss_weights.variance, cfg.loss_weights.mean};
  return {tape.weighted_sum(terms, weights), tape.scalar(smoothing), tape.scalar(variance), tape.scalar(mean)};
}

}  // namespace

// ---------------------------------------------------------------- Mlp

Mlp::Mlp(std::vector<std::size_t> layer_dims, bool activate_last)
    : dims_(std::move(layer_dims)), activate_last_(activate_last) {
  if (dims_.size() < 2) throw Error(ErrorCode::InvalidConfig, "an Mlp needs at least two layer dims");
  for (std::size_t d : dims_) {
    if (d == 0) throw Error(ErrorCode::InvalidConfig, "layer dims must be positive");
  }
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    layers_.push_back(DenseLayer{dims_[l], dims_[l + 1], std::vector<double>(dims_[l] * dims_[l + 1], 0.0),
                                 std::vector<double>(dims_[l + 1], 0.0)});
  }
}

Mlp Mlp::random(std::vector<std::size_t> layer_dims, std::uint64_t seed, bool activate_last) {
  Mlp net(std::move(layer_dims), activate_last);
  RandomStream stream(seed, 0x6d6c70);
  for (auto& layer : net.layers_) {
    layer = random_layer(layer.in, layer.out, std::sqrt(2.0 / static_cast<double>(layer.in)), stream);
  }
  return net;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.weight.size() + layer.bias.size();
  return n;
}

std::vector<double> Mlp::flat_parameters() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const auto& layer : layers_) append(flat, layer);
  return flat;
}

void Mlp::set_flat_parameters(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw Error(ErrorCode::DimensionMismatch, "wrong parameter count");
  std::size_t at = 0;
  for (auto& layer : layers_) at = assign(flat, at, layer);
}

std::vector<double> Mlp::forward(std::span<const double> x) const {
  if (x.size() != input_dim()) throw Error(ErrorCode::DimensionMismatch, "input dim does not match network");
  std::vector<double> h(x.begin(), x.end());
  std::vector<double> next;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    dense_forward(layers_[l], h, next);
    if (l + 1 < layers_.size() || activate_last_) {
      for (double& v : next) v = v > 0.0 ? v : kLeakySlope * v;
    }
    h.swap(next);
  }
  return h;
}

std::vector<Var> Mlp::bind(Tape& tape) const {
  std::vector<Var> params;
  params.reserve(2 * layers_.size());
  for (const auto& layer : layers_) {
    params.push_back(tape.leaf(std::span<const double>(layer.weight)));
    params.push_back(tape.leaf(std::span<const double>(layer.bias)));
  }
  return params;
}

Var Mlp::forward(Tape& tape, std::span<const Var> params, Var x) const {
  Var h = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    h = tape.affine(params[2 * l], params[2 * l + 1], h);
    if (l + 1 < layers_.size() || activate_last_) h = tape.leaky_relu(h, kLeakySlope);
  }
  return h;
}

std::vector<double> Mlp::collect_gradients(const Tape& tape, std::span<const Var> params) {
  std::vector<double> flat;
  for (Var p : params) {
    const auto& g = tape.grad(p);
    flat.insert(flat.end(), g.begin(), g.end());
  }
  return flat;
}

std::vector<double> forward_scores(const Mlp& f, std::span<const double> x) { return f.forward(x); }

std::vector<double> softmax(std::span<const double> scores) {
  const double top = *std::max_element(scores.begin(), scores.end());
  std::vector<double> p(scores.size());
  double z = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) z += (p[i] = std::exp(scores[i] - top));
  for (double& v : p) v /= z;
  return p;
}

Label MlpClassifier::classify(std::span<const double> input) const { return Label{argmax(net_.forward(input))}; }

std::optional<std::vector<double>> MlpClassifier::scores(std::span<const double> input) const {
  return net_.forward(input);
}

// ---------------------------------------------------------------- NoiseGenNet

NoiseGenNet::NoiseGenNet(Mlp trunk, DenseLayer mean_head, DenseLayer scale_head, double mean_bound, double scale_lo,
                         double scale_hi)
    : trunk_(std::move(trunk)),
      mean_head_(std::move(mean_head)),
      scale_head_(std::move(scale_head)),
      mean_bound_(mean_bound),
      scale_lo_(scale_lo),
      scale_hi_(scale_hi) {
  if (!(mean_bound_ > 0.0)) throw Error(ErrorCode::InvalidConfig, "mean_bound must be > 0");
  if (!(scale_lo_ > 0.0 && scale_lo_ < scale_hi_)) throw Error(ErrorCode::InvalidConfig, "need 0 < scale_lo < scale_hi");
  const std::size_t width = trunk_.output_dim();
  const std::size_t dim = trunk_.input_dim();
  for (const DenseLayer* head : {&mean_head_, &scale_head_}) {
    if (head->in != width || head->out != dim || head->weight.size() != width * dim || head->bias.size() != dim) {
      throw Error(ErrorCode::DimensionMismatch, "generator head shape does not match trunk");
    }
  }
}

NoiseGenNet NoiseGenNet::random(std::size_t input_dim, std::size_t hidden, std::size_t depth, double mean_bound,
                                double scale_lo, double scale_hi, double initial_scale, std::uint64_t seed) {
  if (depth < 1) throw Error(ErrorCode::InvalidConfig, "generator trunk needs at least one layer");
  if (!(initial_scale > scale_lo && initial_scale < scale_hi)) {
    throw Error(ErrorCode::InvalidConfig, "initial_scale must lie strictly inside the scale range");
  }
  std::vector<std::size_t> dims{input_dim};
  dims.insert(dims.end(), depth, hidden);
  Mlp trunk = Mlp::random(dims, seed, true);
  RandomStream stream(seed, 0x68656164);
  const double head_std = 0.1 / std::sqrt(static_cast<double>(hidden));
  DenseLayer mean_head = random_layer(hidden, input_dim, head_std, stream);
  DenseLayer scale_head = random_layer(hidden, input_dim, head_std, stream);
  const double frac = (initial_scale - scale_lo) / (scale_hi - scale_lo);
  std::fill(scale_head.bias.begin(), scale_head.bias.end(), std::log(frac / (1.0 - frac)));
  return NoiseGenNet(std::move(trunk), std::move(mean_head), std::move(scale_head), mean_bound, scale_lo, scale_hi);
}

std::size_t NoiseGenNet::parameter_count() const {
  return trunk_.parameter_count() + mean_head_.weight.size() + mean_head_.bias.size() + scale_head_.weight.size() +
         scale_head_.bias.size();
}

std::vector<double> NoiseGenNet::flat_parameters() const {
  std::vector<double> flat = trunk_.flat_parameters();
  append(flat, mean_head_);
  append(flat, scale_head_);
  return flat;
}

void NoiseGenNet::set_flat_parameters(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw Error(ErrorCode::DimensionMismatch, "wrong parameter count");
  const std::size_t trunk_count = trunk_.parameter_count();
  trunk_.set_flat_parameters(flat.first(trunk_count));
  std::size_t at = assign(flat, trunk_count, mean_head_);
  assign(flat, at, scale_head_);
}

NoiseParams NoiseGenNet::forward(std::span<const double> x) const {
  const auto features = trunk_.forward(x);
  NoiseParams out;
  dense_forward(mean_head_, features, out.mean);
  dense_forward(scale_head_, features, out.scale);
  for (double& m : out.mean) m = (2.0 * mean_bound_) * sigmoid(m) + (-mean_bound_);
  for (double& s : out.scale) s = scale_lo_ + (scale_hi_ - scale_lo_) * sigmoid(s);
  return out;
}

NoiseSpec NoiseGenNet::noise_spec(const Vector& x, NoiseFamily family) const {
  auto params = forward(x.values());
  return NoiseSpec(family, Vector(std::move(params.mean)), Vector(std::move(params.scale)));
}

std::vector<Var> NoiseGenNet::bind(Tape& tape) const {
  std::vector<Var> params = trunk_.bind(tape);
  for (const DenseLayer* head : {&mean_head_, &scale_head_}) {
    params.push_back(tape.leaf(std::span<const double>(head->weight)));
    params.push_back(tape.leaf(std::span<const double>(head->bias)));
  }
  return params;
}

std::pair<Var, Var> NoiseGenNet::forward(Tape& tape, std::span<const Var> params, Var x) const {
  const std::size_t n = params.size();
  const Var features = trunk_.forward(tape, params.first(n - 4), x);
  const Var mean_logit = tape.affine(params[n - 4], params[n - 3], features);
  const Var scale_logit = tape.affine(params[n - 2], params[n - 1], features);
  const Var mean = tape.affine_const(tape.sigmoid(mean_logit), 2.0 * mean_bound_, -mean_bound_);
  const Var scale = tape.affine_const(tape.sigmoid(scale_logit), scale_hi_ - scale_lo_, scale_lo_);
  return {mean, scale};
}

// ---------------------------------------------------------------- losses

namespace {

// Objective evaluation accepts all-zero weights (the loss is then 0); only
// training insists on an active term.
void check_train_config(const TrainConfig& cfg, const NoiseGenNet* generator, bool require_active_loss) {
  const auto& w = cfg.loss_weights;
  const double sigma_target = cfg.sigma_target;
  const double fixed_sigma = cfg.fixed_sigma;
  const std::size_t samples_per_input = cfg.samples_per_input;
  const double learning_rate = cfg.learning_rate;
  const std::size_t epochs = cfg.epochs;
  const std::size_t batch = cfg.batch;
  if (!(w.smoothing >= 0.0 && w.variance >= 0.0 && w.mean >= 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "loss weights must be non-negative");
  }
  if (require_active_loss && !(w.smoothing > 0.0 || w.variance > 0.0 || w.mean > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "at least one loss weight must be positive");
  }
  if (!(sigma_target > 0.0)) throw Error(ErrorCode::InvalidConfig, "sigma_target must be > 0");
  if (generator != nullptr && !(sigma_target >= generator->scale_lo() && sigma_target <= generator->scale_hi())) {
    throw Error(ErrorCode::InvalidConfig, "sigma_target must lie within the generator's scale range");
  }
  if (!(fixed_sigma > 0.0)) throw Error(ErrorCode::InvalidConfig, "fixed_sigma must be > 0");
  if (samples_per_input < 1) throw Error(ErrorCode::InvalidConfig, "samples_per_input must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorCode::InvalidConfig, "learning_rate must be finite and >= 0");
  }
  if (epochs < 1 || batch < 1) throw Error(ErrorCode::InvalidConfig, "epochs and batch must be >= 1");
}

}  // namespace

void TrainConfig::validate(const NoiseGenNet* generator) const { check_train_config(*this, generator, true); }

double smoothing_loss(const Mlp& f, const NoiseGenNet& g, std::span<const double> x, Label y, std::size_t samples,
                      const RandomStream& stream) {
  if (y.index >= f.output_dim()) throw Error(ErrorCode::InvalidLabel, "label out of range");
  if (samples < 1) throw Error(ErrorCode::InvalidConfig, "samples must be >= 1");
  const auto noise = g.forward(x);
  std::vector<double> point(x.size());
  double total = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const auto xi = standard_normal_vector(x.size(), stream.fork(s));
    for (std::size_t i = 0; i < x.size(); ++i) point[i] = x[i] + (noise.mean[i] + noise.scale[i] * xi[i]);
    total += cross_entropy(f.forward(point), y.index);
  }
  return total / static_cast<double>(samples);
}

double smoothing_loss_isotropic(const Mlp& f, double sigma, std::span<const double> x, Label y, std::size_t samples,
                                const RandomStream& stream) {
  if (y.index >= f.output_dim()) throw Error(ErrorCode::InvalidLabel, "label out of range");
  if (samples < 1) throw Error(ErrorCode::InvalidConfig, "samples must be >= 1");
  std::vector<double> point(x.size());
  double total = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const auto xi = standard_normal_vector(x.size(), stream.fork(s));
    for (std::size_t i = 0; i < x.size(); ++i) point[i] = x[i] + (sigma * xi[i] + 0.0);
    total += cross_entropy(f.forward(point), y.index);
  }
  return total / static_cast<double>(samples);
}

double variance_loss(const NoiseGenNet& g, std::span<const double> x, double sigma_target) {
  const auto noise = g.forward(x);
  const double min_scale = *std::min_element(noise.scale.begin(), noise.scale.end());
  return std::abs(min_scale * (1.0 / sigma_target) + -1.0);
}

double mean_loss(const NoiseGenNet& g, std::span<const double> x) {
  const auto noise = g.forward(x);
  return std::sqrt(std::inner_product(noise.mean.begin(), noise.mean.end(), noise.mean.begin(), 0.0));
}

LossBreakdown total_loss_and_grads(const Mlp& f, const NoiseGenNet* g, std::span<const Example> batch,
                                   const TrainConfig& cfg, const RandomStream& stream) {
  if (batch.empty()) throw Error(ErrorCode::InvalidConfig, "batch must be non-empty");
  check_train_config(cfg, g, false);
  LossBreakdown out;
  out.grad_classifier.assign(f.parameter_count(), 0.0);
  if (g != nullptr) out.grad_generator.assign(g->parameter_count(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(batch.size());

  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Example& ex = batch[i];
    if (ex.x.size() != f.input_dim()) throw Error(ErrorCode::DimensionMismatch, "example dim != classifier input");
    if (ex.y.index >= f.output_dim()) throw Error(ErrorCode::InvalidLabel, "label out of range");
    Tape tape;
    const auto f_params = f.bind(tape);
    const auto g_params = g != nullptr ? g->bind(tape) : std::vector<Var>{};
    const ExampleTerms terms = record_example(tape, f, f_params, g, g_params, ex, cfg, stream.fork(i));
    tape.backward(terms.total);

    out.total += inv_n * tape.scalar(terms.total);
    out.smoothing += inv_n * terms.smoothing;
    out.variance += inv_n * terms.variance;
    out.mean += inv_n * terms.mean;
    const auto gf = Mlp::collect_gradients(tape, f_params);
    for (std::size_t k = 0; k < gf.size(); ++k) out.grad_classifier[k] += inv_n * gf[k];
    if (g != nullptr) {
      const auto gg = Mlp::collect_gradients(tape, g_params);
      for (std::size_t k = 0; k < gg.size(); ++k) out.grad_generator[k] += inv_n * gg[k];
    }
  }
  return out;
}

TrainTrace train(Mlp& f, NoiseGenNet* g, std::span<const Example> data, const TrainConfig& cfg) {
  if (data.empty()) throw Error(ErrorCode::InvalidConfig, "training set is empty");
  cfg.validate(g);
  if (g != nullptr && g->input_dim() != f.input_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "generator and classifier input dims differ");
  }

  TrainTrace trace;
  const RandomStream shuffle_root(cfg.seed, 0x73687566);
  const RandomStream noise_root(cfg.seed, 0x6e6f6973);
  std::vector<std::size_t> order(data.size());
  std::vector<Example> batch;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    RandomStream shuffle = shuffle_root.fork(epoch);
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(shuffle.next_u64() % i);
      std::swap(order[i - 1], order[j]);
    }

    double sums[4] = {0.0, 0.0, 0.0, 0.0};
    const RandomStream epoch_noise = noise_root.fork(epoch);
    for (std::size_t start = 0, b = 0; start < order.size(); start += cfg.batch, ++b) {
      batch.clear();
      for (std::size_t k = start; k < std::min(order.size(), start + cfg.batch); ++k) batch.push_back(data[order[k]]);
      const auto step = total_loss_and_grads(f, g, batch, cfg, epoch_noise.fork(b));
      if (!std::isfinite(step.total)) {
        throw Error(ErrorCode::DivergenceDetected, "non-finite loss in epoch " + std::to_string(epoch));
      }
      const auto weight = static_cast<double>(batch.size());
      sums[0] += weight * step.total;
      sums[1] += weight * step.smoothing;
      sums[2] += weight * step.variance;
      sums[3] += weight * step.mean;

      auto params = f.flat_parameters();
      for (std::size_t k = 0; k < params.size(); ++k) params[k] -= cfg.learning_rate * step.grad_classifier[k];
      if (!all_finite(params)) throw Error(ErrorCode::DivergenceDetected, "non-finite classifier parameter");
      f.set_flat_parameters(params);
      if (g != nullptr) {
        auto gp = g->flat_parameters();
        for (std::size_t k = 0; k < gp.size(); ++k) gp[k] -= cfg.learning_rate * step.grad_generator[k];
        if (!all_finite(gp)) throw Error(ErrorCode::DivergenceDetected, "non-finite generator parameter");
        g->set_flat_parameters(gp);
      }
    }
    const auto n = static_cast<double>(data.size());
    trace.epoch_total.push_back(sums[0] / n);
    trace.epoch_smoothing.push_back(sums[1] / n);
    trace.epoch_variance.push_back(sums[2] / n);
    trace.epoch_mean.push_back(sums[3] / n);
  }
  return trace;
}

// ---------------------------------------------------------------- PGD

std::vector<double> pgd_attack(const Mlp& f, std::span<const double> x, Label y, double eps_inf, std::size_t iters,
                               double step, std::pair<double, double> clip) {
  if (x.size() != f.input_dim()) throw Error(ErrorCode::DimensionMismatch, "input dim does not match network");
  if (y.index >= f.output_dim()) throw Error(ErrorCode::InvalidLabel, "label out of range");
  if (!(eps_inf >= 0.0) || !(step >= 0.0)) throw Error(ErrorCode::OutOfDomain, "eps_inf and step must be >= 0");
  const auto [lo, hi] = clip;
  if (!(lo <= hi)) throw Error(ErrorCode::OutOfDomain, "clip range must satisfy lo <= hi");
  for (double v : x) {
    if (v < lo || v > hi) throw Error(ErrorCode::OutOfDomain, "input lies outside the clip range");
  }

  std::vector<double> adv(x.begin(), x.end());
  for (std::size_t it = 0; it < iters; ++it) {
    Tape tape;
    const auto params = f.bind(tape);
    const Var input = tape.leaf(std::span<const double>(adv));
    const Var loss = tape.softmax_cross_entropy(f.forward(tape, params, input), y.index);
    tape.backward(loss);
    const auto& grad = tape.grad(input);
    for (std::size_t i = 0; i < adv.size(); ++i) {
      const double dir = grad[i] > 0.0 ? 1.0 : (grad[i] < 0.0 ? -1.0 : 0.0);
      adv[i] = std::clamp(adv[i] + step * dir, x[i] - eps_inf, x[i] + eps_inf);
      adv[i] = std::clamp(adv[i], lo, hi);
    }
  }
  return adv;
}

}  // namespace ars::net
