#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "ars/binomial.hpp"
#include "ars/certify.hpp"
#include "ars/noise.hpp"
#include "ars/oracle.hpp"
#include "ars/radius.hpp"
#include "support.hpp"

using namespace ars;
using oracle::LinearClassifier;

namespace {

NoiseSpec gaussian(Vector mean, Vector scale) { return NoiseSpec(NoiseFamily::Gaussian, std::move(mean), std::move(scale)); }

// Two-stage Monte Carlo certification for N(0, sigma^2 I), written out
// against the public sampling primitives only.
CertifyOutcome reference_isotropic(const BaseClassifier& f, const Vector& x, double sigma, const CertifyConfig& cfg,
                                   const RandomStream& stream) {
  auto tally = [&](std::uint64_t num, const RandomStream& s) {
    std::vector<std::uint64_t> counts(f.num_classes(), 0);
    std::vector<double> z(x.dim());
    for (std::uint64_t j = 0; j < num; ++j) {
      RandomStream draw = s.fork(j);
      for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] + sigma * standard_draw(NoiseFamily::Gaussian, draw);
      ++counts[f.classify(z).index];
    }
    return counts;
  };
  const auto sel = tally(cfg.n0, stream.fork(0));
  std::size_t top = 0;
  for (std::size_t c = 1; c < sel.size(); ++c) {
    if (sel[c] > sel[top]) top = c;
  }
  const auto est = tally(cfg.n, stream.fork(1));
  const double pa = lower_conf_bound(est[top], cfg.n, 1.0 - cfg.confidence_alpha);
  if (!(pa > 0.5)) return CertifyOutcome::abstain(Norm::L2);
  const double clamped = clamp_probability(pa);
  return {CertifyStatus::Certified, Label{top}, sigma * std_normal_quantile(clamped), clamped, Norm::L2};
}

}  // namespace

TEST_CASE("argmax and top-two break ties toward the lower index") {
  const std::vector<double> s{1.0, 3.0, 3.0, 2.0};
  CHECK(argmax(s) == 1);
  MonteCarloCounts c{{4, 9, 9, 1}, 23};
  CHECK(c.top() == 1);
  CHECK(c.top_two() == std::pair<std::size_t, std::size_t>{1, 2});
  MonteCarloCounts z{{0, 0, 5}, 5};
  CHECK(z.top_two() == std::pair<std::size_t, std::size_t>{2, 0});
}

TEST_CASE("constant classifier tallies everything on its class") {
  const testing::ConstantClassifier f(0, 3, 2);
  const auto counts = classify_samples(f, Vector{0.3, -1.0}, gaussian(Vector{0, 0}, Vector{1, 1}), 50,
                                       RandomStream(1, 0));
  CHECK(counts.counts == std::vector<std::uint64_t>{50, 0, 0});
  CHECK(counts.total == 50);
}

TEST_CASE("threshold classifier frequencies match Phi") {
  const LinearClassifier f(Vector{1.0}, 0.0);
  const auto centred = classify_samples(f, Vector{0.0}, gaussian(Vector{0.0}, Vector{1.0}), 1000000, RandomStream(2, 0));
  CHECK(std::abs(centred.counts[1] / 1e6 - 0.5) < 0.002);
  const auto shifted = classify_samples(f, Vector{0.0}, gaussian(Vector{1.0}, Vector{1.0}), 1000000, RandomStream(2, 1));
  CHECK(std::abs(shifted.counts[1] / 1e6 - 0.8413447460685429) < 0.002);
}

TEST_CASE("counts do not depend on workers or batch size") {
  const LinearClassifier f(Vector{0.4, -1.0, 2.0}, 0.1);
  const Vector x{0.2, 0.1, -0.05};
  const auto spec = gaussian(Vector{0.1, 0, 0}, Vector{0.5, 1.5, 0.2});
  const RandomStream s(3, 99);
  const auto base = classify_samples(f, x, spec, 20011, s, 1, 1000);
  CHECK(classify_samples(f, x, spec, 20011, s, 4, 1000) == base);
  CHECK(classify_samples(f, x, spec, 20011, s, 3, 77) == base);
  CHECK(classify_samples(f, x, spec, 20011, s, 1, 20011) == base);
}

TEST_CASE("classify_samples validates dimensions") {
  const LinearClassifier f(Vector{1.0, 1.0}, 0.0);
  CHECK_THROWS_AS(classify_samples(f, Vector{0, 0}, gaussian(Vector{0}, Vector{1}), 5, RandomStream(0, 0)), Error);
  CHECK_THROWS_AS(classify_samples(f, Vector{0}, gaussian(Vector{0}, Vector{1}), 5, RandomStream(0, 0)), Error);
}

TEST_CASE("predict on a constant classifier never abstains") {
  const testing::ConstantClassifier f(1, 2, 1);
  for (std::uint64_t n : {11u, 100u, 1000u}) {
    const auto p = predict(f, Vector{0.0}, gaussian(Vector{0.0}, Vector{1.0}), n, 0.001, RandomStream(4, n));
    REQUIRE(p.label.has_value());
    CHECK(p.label->index == 1);
    CHECK(p.p_value == doctest::Approx(2.0 * std::pow(0.5, static_cast<double>(n))).epsilon(1e-9));
  }
}

TEST_CASE("predict abstains at the decision boundary") {
  const LinearClassifier f(Vector{1.0}, 0.0);
  int answered = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto p = predict(f, Vector{0.0}, gaussian(Vector{0.0}, Vector{1.0}), 200, 0.001, RandomStream(5, t));
    answered += p.label.has_value();
  }
  // Expected count under H0 is at most 1; P[Binomial(1000, 0.001) >= 4] < 0.02.
  CHECK(answered <= 3);
}

TEST_CASE("predict finds the top class when p_A = 0.9") {
  const LinearClassifier f(Vector{1.0}, 0.0);
  const Vector x{std_normal_quantile(0.9)};
  int correct = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto p = predict(f, x, gaussian(Vector{0.0}, Vector{1.0}), 1000, 0.001, RandomStream(6, t));
    correct += p.label && p.label->index == 1;
  }
  CHECK(correct >= 990);
}

TEST_CASE("certify a constant classifier") {
  const testing::ConstantClassifier f(0, 2, 3);
  CertifyConfig cfg;
  cfg.n0 = 100;
  cfg.n = 100000;
  const auto out = certify(f, Vector{0, 0, 0}, gaussian(Vector{0, 0, 0}, Vector{1, 1, 1}), cfg, RandomStream(7, 0));
  REQUIRE(out.certified());
  CHECK(out.label->index == 0);
  CHECK(out.norm == Norm::L2);
  CHECK(std::abs(*out.pa_lower - 0.9999309248330094) < 1e-12);
  CHECK(std::abs(*out.radius - 3.8114565633899145) < 1e-9);
  CHECK(std::abs(*out.radius - std_normal_quantile(lower_conf_bound(100000, 100000, 0.999))) < 1e-15);
}

TEST_CASE("certify abstains when p_A = 1/2") {
  const LinearClassifier f(Vector{1.0}, 0.0);
  CertifyConfig cfg;
  cfg.n0 = 100;
  cfg.n = 1000;
  int certified = 0;
  for (int t = 0; t < 1000; ++t) {
    certified += certify(f, Vector{0.0}, gaussian(Vector{0.0}, Vector{1.0}), cfg, RandomStream(8, t)).certified();
  }
  // The Clopper-Pearson bound still certifies with probability about 9e-4
  // here, so allow the same five-sigma slack over alpha used elsewhere.
  const double allowed = cfg.confidence_alpha + 5.0 * std::sqrt(cfg.confidence_alpha / 1000.0);
  CHECK(certified / 1000.0 <= allowed);
}

TEST_CASE("certified radius for an anisotropic linear problem") {
  // p_A = Phi(1) along axis 0 with sigma = (1, 2): the exact binary radius is 1.
  const LinearClassifier f(Vector{1.0, 0.0}, 0.0);
  const Vector x{1.0, 0.0};
  const auto spec = gaussian(Vector{0, 0}, Vector{1, 2});
  CertifyConfig cfg;
  cfg.n0 = 100;
  cfg.n = 100000;
  int below_one = 0, tight = 0;
  const int trials = 60;
  for (int t = 0; t < trials; ++t) {
    const auto out = certify(f, x, spec, cfg, RandomStream(9, t));
    REQUIRE(out.certified());
    CHECK(out.label->index == 1);
    below_one += *out.radius <= 1.0;
    tight += *out.radius >= 0.93;
  }
  CHECK(below_one == trials);
  CHECK(tight >= 0.95 * trials);
}

TEST_CASE("equal scales reproduce isotropic certification stream for stream") {
  const LinearClassifier f(Vector{0.7, -0.3, 0.2, 1.0}, 0.05);
  CertifyConfig cfg;
  cfg.n0 = 64;
  cfg.n = 3000;
  RandomStream rng(10, 0);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> xs(4);
    for (double& v : xs) v = 2.0 * rng.uniform() - 1.0;
    const Vector x(xs);
    const double sigma = 0.1 + rng.uniform();
    const RandomStream s(10, 1000 + t);
    const auto got = certify(f, x, NoiseSpec::isotropic(NoiseFamily::Gaussian, 4, sigma), cfg, s);
    const auto want = reference_isotropic(f, x, sigma, cfg, s);
    CHECK(got == want);
    if (got.certified()) {
      CHECK(std::abs(*got.radius - radius_iso_gaussian(sigma, {*got.pa_lower, 1.0 - *got.pa_lower})) < 1e-12);
    }
  }
}

TEST_CASE("laplace certificates use the l1 radius with pb = 1 - pa") {
  const LinearClassifier f(Vector{1.0, 1.0}, 0.0);
  const Vector x{1.5, 1.0};
  const NoiseSpec spec(NoiseFamily::Laplace, Vector{0, 0}, Vector{0.8, 2.0});
  CertifyConfig cfg;
  cfg.n0 = 100;
  cfg.n = 20000;
  const auto out = certify(f, x, spec, cfg, RandomStream(11, 0));
  REQUIRE(out.certified());
  CHECK(out.norm == Norm::L1);
  const double pa = *out.pa_lower;
  CHECK(*out.radius == radius_aniso_laplace(spec.scale().values(), {pa, 1.0 - pa}));
}

TEST_CASE("certification is identical for every worker count") {
  const LinearClassifier f(Vector{1.0, -2.0}, 0.3);
  const Vector x{1.0, -0.5};
  const auto spec = gaussian(Vector{0.1, -0.1}, Vector{0.4, 0.9});
  CertifyConfig cfg;
  cfg.n0 = 100;
  cfg.n = 10000;
  cfg.batch_size = 333;
  const auto one = certify(f, x, spec, cfg, RandomStream(12, 5));
  for (std::size_t w : {2u, 3u, 8u}) {
    cfg.workers = w;
    CHECK(certify(f, x, spec, cfg, RandomStream(12, 5)) == one);
  }
}

TEST_CASE("parallel_for propagates exceptions") {
  CHECK_THROWS_AS(parallel_for(100, 4,
                               [](std::size_t i) {
                                 if (i == 37) throw Error(ErrorCode::OutOfRange, "boom");
                               }),
                  Error);
}
