#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "ars/certify.hpp"
#include "ars/core.hpp"
#include "ars/rng.hpp"

using namespace ars;

namespace {

template <class Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an ars::Error");
  return ErrorCode::ParseError;
}

}  // namespace

TEST_CASE("vector rejects empty and non-finite input") {
  CHECK(code_of([] { Vector v(std::vector<double>{}); }) == ErrorCode::DimensionMismatch);
  CHECK(Vector{1.0, -2.5}.dim() == 2);
  CHECK(Vector::filled(4, 0.5)[3] == 0.5);

  const double bad[] = {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::infinity(),
                        -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::signaling_NaN()};
  RandomStream rng(42, 0);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t dim = 1 + rng.next_u64() % 32;
    std::vector<double> entries(dim);
    for (double& e : entries) e = (rng.uniform() - 0.5) * 1e6;
    const std::size_t pos = rng.next_u64() % dim;
    entries[pos] = bad[rng.next_u64() % 4];
    CHECK(code_of([&] { Vector v(entries); }) == ErrorCode::NonFiniteEntry);
  }
}

TEST_CASE("label range") {
  CHECK(Label::checked(2, 3).index == 2);
  CHECK(code_of([] { Label::checked(3, 3); }) == ErrorCode::InvalidLabel);
  CHECK(code_of([] { Label::checked(0, 1); }) == ErrorCode::InvalidLabel);
}

TEST_CASE("noise spec construction and validation") {
  const NoiseSpec ok(NoiseFamily::Gaussian, Vector{0, 0, 0}, Vector{1, 1, 1});
  CHECK_NOTHROW(validate_noise_spec(ok, 3));
  CHECK(code_of([&] { validate_noise_spec(ok, 4); }) == ErrorCode::DimensionMismatch);

  const NoiseSpec two(NoiseFamily::Gaussian, Vector{0, 0}, Vector{1, 1});
  CHECK(code_of([&] { validate_noise_spec(two, 3); }) == ErrorCode::DimensionMismatch);

  CHECK(code_of([] { NoiseSpec s(NoiseFamily::Gaussian, Vector{0, 0}, Vector{1, 0}); }) ==
        ErrorCode::NonPositiveScale);
  CHECK(code_of([] { NoiseSpec s(NoiseFamily::Laplace, Vector{0, 0}, Vector{-1, 1}); }) ==
        ErrorCode::NonPositiveScale);
  CHECK(code_of([] { NoiseSpec s(NoiseFamily::Gaussian, Vector{0}, Vector{1, 1}); }) ==
        ErrorCode::DimensionMismatch);

  const NoiseSpec aniso(NoiseFamily::Laplace, Vector{1, 2, 3}, Vector{0.7, 0.2, 4.0});
  CHECK(aniso.min_scale() == 0.2);
  CHECK(NoiseSpec::isotropic(NoiseFamily::Gaussian, 5, 0.25).min_scale() == 0.25);
}

TEST_CASE("noise family names") {
  CHECK(parse_noise_family("gaussian") == NoiseFamily::Gaussian);
  CHECK(parse_noise_family("laplace") == NoiseFamily::Laplace);
  CHECK(std::string(to_string(NoiseFamily::Laplace)) == "laplace");
  CHECK(code_of([] { parse_noise_family("cauchy"); }) == ErrorCode::ConfigError);
}

TEST_CASE("certify config validation") {
  CertifyConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.n0 = 200;
  cfg.n = 100;
  CHECK(code_of([&] { cfg.validate(); }) == ErrorCode::ConfigError);
  cfg = CertifyConfig{};
  cfg.confidence_alpha = 1.0;
  CHECK(code_of([&] { cfg.validate(); }) == ErrorCode::ConfigError);
  cfg.confidence_alpha = 0.0;
  CHECK(code_of([&] { cfg.validate(); }) == ErrorCode::ConfigError);
  cfg = CertifyConfig{};
  cfg.n0 = 0;
  CHECK(code_of([&] { cfg.validate(); }) == ErrorCode::ConfigError);
}

TEST_CASE("probability clamp") {
  CHECK(clamp_probability(0.0) == kProbabilityFloor);
  CHECK(clamp_probability(1.0) == 1.0 - kProbabilityFloor);
  CHECK(clamp_probability(0.3) == 0.3);
}

TEST_CASE("philox known-answer vectors") {
  using A4 = std::array<std::uint32_t, 4>;
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
        A4{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
        A4{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("random stream determinism and independence") {
  RandomStream a(1, 0), b(1, 0), c(1, 1);
  bool all_equal = true;
  for (int i = 0; i < 1000; ++i) all_equal = all_equal && a.next_u64() == b.next_u64();
  CHECK(all_equal);
  CHECK(RandomStream(1, 0).next_u64() != c.next_u64());
  CHECK(RandomStream(1, 0).next_u64() != RandomStream(2, 0).next_u64());
  CHECK(RandomStream(1, 0).fork(3).next_u64() != RandomStream(1, 0).fork(4).next_u64());

  RandomStream u(9, 9);
  double lo = 1.0, hi = 0.0, sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = u.uniform();
    lo = std::min(lo, x);
    hi = std::max(hi, x);
    sum += x;
  }
  CHECK(lo > 0.0);
  CHECK(hi < 1.0);
  CHECK(std::abs(sum / n - 0.5) < 5.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST_CASE("forked draws do not depend on the worker count") {
  const RandomStream root(1, 7);
  auto draw = [&](std::size_t workers) {
    std::vector<double> out(4096);
    parallel_for(out.size(), workers, [&](std::size_t j) {
      RandomStream s = root.fork(j);
      out[j] = s.uniform();
    });
    return out;
  };
  const auto one = draw(1);
  const auto eight = draw(8);
  CHECK(one == eight);
  auto sorted_one = one, sorted_eight = eight;
  std::sort(sorted_one.begin(), sorted_one.end());
  std::sort(sorted_eight.begin(), sorted_eight.end());
  CHECK(sorted_one == sorted_eight);
}
