#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "markovcp/chains.hpp"
#include "markovcp/errors.hpp"
#include "markovcp/rng.hpp"

using namespace markovcp;
using namespace markovcp::chains;

namespace {

FiniteKernel two_state(double stay0, double stay1) {
  Matrix m(2, 2);
  m(0, 0) = stay0;
  m(0, 1) = 1.0 - stay0;
  m(1, 0) = 1.0 - stay1;
  m(1, 1) = stay1;
  return FiniteKernel(std::move(m));
}

// Random row-stochastic kernel with strictly positive entries (hence
// irreducible and aperiodic).
FiniteKernel random_ergodic_kernel(std::size_t n, SplitMix64& rng) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      m(i, j) = -std::log(1.0 - rng.uniform01()) + 1e-3;
      sum += m(i, j);
    }
    for (std::size_t j = 0; j < n; ++j) m(i, j) /= sum;
  }
  return FiniteKernel(std::move(m));
}

// Brute-force oracle: worst-start total variation after t steps, computed
// with its own naive matrix powering (independent of the library path).
struct PowerOracle {
  std::vector<std::vector<double>> p;

  explicit PowerOracle(const FiniteKernel& kernel) {
    const std::size_t n = kernel.size();
    p.assign(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) p[i][j] = kernel(i, j);
  }

  static std::vector<std::vector<double>> mul(const std::vector<std::vector<double>>& a,
                                              const std::vector<std::vector<double>>& b) {
    const std::size_t n = a.size();
    std::vector<std::vector<double>> c(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k) c[i][j] += a[i][k] * b[k][j];
    return c;
  }

  std::vector<double> long_run_row() const {
    auto power = p;
    for (int i = 0; i < 12; ++i) power = mul(power, power);  // P^(2^12)
    return power[0];
  }

  long mixing_time(double eps, long cap = 4096) const {
    const auto pi = long_run_row();
    auto power = p;
    for (long t = 1; t <= cap; ++t) {
      double worst = 0.0;
      for (const auto& row : power) {
        double acc = 0.0;
        for (std::size_t j = 0; j < row.size(); ++j) acc += std::abs(row[j] - pi[j]);
        worst = std::max(worst, 0.5 * acc);
      }
      if (worst <= eps) return t;
      power = mul(power, p);
    }
    return -1;
  }
};

}  // namespace

TEST_SUITE("chains") {

TEST_CASE("lazy walk kernel rows") {
  const FiniteKernel k = lazy_walk_kernel(3);
  CHECK(k(0, 0) == 0.5);
  CHECK(k(0, 1) == 0.25);
  CHECK(k(0, 2) == 0.25);

  const FiniteKernel big = lazy_walk_kernel(20);
  for (std::size_t i = 0; i < 20; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < 20; ++j) {
      CHECK(big(i, j) >= 0.0);
      CHECK(big(i, j) <= 1.0);
      sum += big(i, j);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }

  CHECK_THROWS_AS(lazy_walk_kernel(2), InvalidParameter);
}

TEST_CASE("finite kernel validation") {
  Matrix bad(2, 2);
  bad(0, 0) = 0.7;
  bad(0, 1) = 0.7;
  bad(1, 0) = 0.5;
  bad(1, 1) = 0.5;
  CHECK_THROWS_AS(FiniteKernel{std::move(bad)}, InvalidParameter);
  CHECK_THROWS_AS(Distribution({0.5, 0.6}), InvalidParameter);
  CHECK_THROWS_AS(Ar1Spec(1.0, 1.0), InvalidParameter);
  CHECK_THROWS_AS(Ar1Spec(0.5, 0.0), InvalidParameter);
}

TEST_CASE("simulate_finite absorbing chain and determinism") {
  const FiniteKernel id = FiniteKernel::identity(4);
  const auto states = simulate_finite(id, Distribution::point_mass(4, 2), 5, 7);
  CHECK(states == std::vector<std::size_t>{2, 2, 2, 2, 2});

  const FiniteKernel lazy = lazy_walk_kernel(5);
  const auto a = simulate_finite(lazy, Distribution::uniform(5), 1000, 42);
  const auto b = simulate_finite(lazy, Distribution::uniform(5), 1000, 42);
  CHECK(a == b);

  CHECK_THROWS_AS(simulate_finite(lazy, Distribution::uniform(4), 10, 0), InvalidParameter);
}

TEST_CASE("simulate_finite long-run frequencies match stationarity") {
  const FiniteKernel lazy = lazy_walk_kernel(4);
  const auto states = simulate_finite(lazy, Distribution::uniform(4), 100000, 2024);
  std::vector<double> freq(4, 0.0);
  for (auto s : states) freq[s] += 1.0;
  for (auto& f : freq) f /= static_cast<double>(states.size());
  for (double f : freq) CHECK(std::abs(f - 0.25) < 0.02);
}

TEST_CASE("simulate_ar1 decoupling, determinism and stationary variance") {
  const Ar1Spec decoupled(0.0, 1.0);
  const auto from5 = simulate_ar1(decoupled, 5.0, 50, 99);
  const auto fromNeg = simulate_ar1(decoupled, -3.0, 50, 99);
  CHECK(from5[0] == 5.0);
  CHECK(fromNeg[0] == -3.0);
  for (std::size_t t = 1; t < from5.size(); ++t) CHECK(from5[t] == fromNeg[t]);

  const Ar1Spec spec(0.9, 1.0);
  const auto xs = simulate_ar1(spec, 0.0, 100000, 7);
  CHECK(xs == simulate_ar1(spec, 0.0, 100000, 7));
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(xs.size());
  const double stationary = 1.0 / (1.0 - 0.81);
  CHECK(std::abs(var - stationary) < 0.1 * stationary);
}

TEST_CASE("stationary distribution") {
  const Distribution pi = stationary_distribution(lazy_walk_kernel(10));
  for (std::size_t i = 0; i < 10; ++i) CHECK(pi[i] == doctest::Approx(0.1).epsilon(1e-12));

  CHECK_THROWS_AS(stationary_distribution(FiniteKernel::identity(3)), NotErgodic);

  // pi P = pi solved by hand: pi = (2/3, 1/3).
  const Distribution two = stationary_distribution(two_state(0.9, 0.8));
  CHECK(two[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-10));
  CHECK(two[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
}

TEST_CASE("stationary residual is tiny on random kernels") {
  SplitMix64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + rng() % 7;
    const FiniteKernel kernel = random_ergodic_kernel(n, rng);
    const Distribution pi = stationary_distribution(kernel);
    for (std::size_t j = 0; j < n; ++j) {
      double out = 0.0;
      for (std::size_t i = 0; i < n; ++i) out += pi[i] * kernel(i, j);
      CHECK(std::abs(out - pi[j]) < 1e-10);
    }
  }
}

TEST_CASE("tv distance") {
  const Distribution p({0.5, 0.5});
  CHECK(tv_distance(p, p) == 0.0);
  CHECK(tv_distance(Distribution::point_mass(2, 0), Distribution::point_mass(2, 1)) == 1.0);
  CHECK(tv_distance(p, Distribution({0.75, 0.25})) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK_THROWS_AS(tv_distance(p, Distribution::uniform(3)), InvalidParameter);
}

TEST_CASE("mixing time basics") {
  // All rows already stationary: mixes in one step.
  Matrix m(3, 3);
  for (std::size_t i = 0; i < 3; ++i) {
    m(i, 0) = 0.2;
    m(i, 1) = 0.3;
    m(i, 2) = 0.5;
  }
  CHECK(mixing_time(FiniteKernel(std::move(m))) == 1);

  const FiniteKernel lazy = lazy_walk_kernel(4);
  CHECK(mixing_time(lazy, 0.5) <= mixing_time(lazy, 0.25));
}

TEST_CASE("mixing time matches brute-force powering") {
  const FiniteKernel lazy = lazy_walk_kernel(4);
  CHECK(mixing_time(lazy) == PowerOracle(lazy).mixing_time(0.25));

  SplitMix64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 2 + rng() % 7;
    const FiniteKernel kernel = random_ergodic_kernel(n, rng);
    CHECK(mixing_time(kernel) == PowerOracle(kernel).mixing_time(0.25));
  }
}

TEST_CASE("mixing time cap on an ultra-slow chain") {
  CHECK_THROWS_AS(mixing_time(two_state(1e-9, 1e-9), 1e-3), NotErgodic);
}

TEST_CASE("spectral gap of the lazy walk") {
  const FiniteKernel lazy = lazy_walk_kernel(20);
  const SpectralGap gap = spectral_gap_exact(lazy, stationary_distribution(lazy));
  const double expected = (1.0 + std::cos(2.0 * std::numbers::pi / 20.0)) / 2.0;
  CHECK(std::abs(gap.lambda2 - expected) < 1e-9);
  CHECK(gap.rho == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("spectral gap closed form across cycle lengths") {
  for (std::size_t w = 3; w <= 50; ++w) {
    const FiniteKernel lazy = lazy_walk_kernel(w);
    const SpectralGap gap = spectral_gap_exact(lazy, stationary_distribution(lazy));
    const double expected = (1.0 + std::cos(2.0 * std::numbers::pi / static_cast<double>(w))) / 2.0;
    CHECK(std::abs(gap.lambda2 - expected) < 1e-9);
  }
}

TEST_CASE("spectral gap of a rank-one projector is zero") {
  Matrix m(4, 4);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) m(i, j) = 0.25;
  const SpectralGap gap = spectral_gap_exact(FiniteKernel(std::move(m)), Distribution::uniform(4));
  CHECK(std::abs(gap.lambda2) < 1e-10);
}

TEST_CASE("spectral gap eigenvalues of the w=4 walk") {
  // Circulant eigenvalues (1 + cos(2 pi j / 4)) / 2 = {1, 1/2, 0, 1/2}.
  const FiniteKernel lazy = lazy_walk_kernel(4);
  const SpectralGap gap = spectral_gap_exact(lazy, stationary_distribution(lazy));
  CHECK(gap.lambda2 == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(gap.lambda_min == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(gap.rho == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("non-reversible kernel is rejected") {
  Matrix m(3, 3);
  m(0, 0) = 0.5;
  m(0, 1) = 0.5;
  m(1, 1) = 0.5;
  m(1, 2) = 0.5;
  m(2, 2) = 0.5;
  m(2, 0) = 0.5;
  const FiniteKernel cyclic(std::move(m));
  CHECK_THROWS_AS(spectral_gap_exact(cyclic, stationary_distribution(cyclic)), NotReversible);
}

TEST_CASE("ar1 marginal law") {
  const Ar1Spec spec(0.9, 1.0);
  for (long t = 1; t <= 5; ++t) CHECK(ar1_marginal(spec, 0.0, t).mean == 0.0);

  const Ar1Spec white(0.0, 2.0);
  const Ar1Marginal m1 = ar1_marginal(white, 3.0, 1);
  CHECK(m1.mean == 0.0);
  CHECK(m1.variance == doctest::Approx(4.0).epsilon(1e-15));

  const Ar1Marginal m3 = ar1_marginal(spec, 2.0, 3);
  CHECK(m3.mean == doctest::Approx(std::pow(0.9, 3) * 2.0).epsilon(1e-12));
  CHECK(m3.variance == doctest::Approx((1.0 - std::pow(0.9, 6)) / 0.19).epsilon(1e-12));

  CHECK_THROWS_AS(ar1_marginal(spec, 0.0, 0), InvalidParameter);
}

TEST_CASE("ar1 beta bound") {
  CHECK(ar1_beta_bound(Ar1Spec(0.0, 1.0), 5) == 0.0);
  const Ar1Spec spec(0.9, 1.0);
  CHECK(ar1_beta_bound(spec, 1) == doctest::Approx(0.9 * std::sqrt(0.19 / 2.0)).epsilon(1e-12));

  double prev = ar1_beta_bound(spec, 1);
  for (long a = 2; a <= 60; ++a) {
    const double cur = ar1_beta_bound(spec, a);
    CHECK(cur <= prev);
    prev = cur;
  }
  CHECK(ar1_beta_bound(spec, 500) < 1e-20);
}

TEST_CASE("long simulation tracks the stationary law") {
  const FiniteKernel lazy = lazy_walk_kernel(10);
  const auto states = simulate_finite(lazy, Distribution::uniform(10), 1000000, 5);
  std::vector<double> freq(10, 0.0);
  for (auto s : states) freq[s] += 1.0;
  double max_dev = 0.0;
  for (double f : freq) max_dev = std::max(max_dev, std::abs(f / 1e6 - 0.1));
  CHECK(max_dev < 0.01);
}

}  // TEST_SUITE
