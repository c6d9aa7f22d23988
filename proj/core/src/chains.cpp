#include "markovcp/chains.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "markovcp/errors.hpp"
#include "markovcp/rng.hpp"

namespace markovcp::chains {

namespace {

constexpr double kSumTolerance = 1e-12;
constexpr double kReversibilityTolerance = 1e-10;

void check_probability_entries(const std::vector<double>& values, const char* what) {
  double sum = 0.0;
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0))
      throw InvalidParameter(std::string(what) + ": entry outside [0, 1]");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSumTolerance)
    throw InvalidParameter(std::string(what) + ": entries sum to " + std::to_string(sum) +
                           ", expected 1");
}

}  // namespace

Distribution::Distribution(std::vector<double> weights) : weights_(std::move(weights)) {
  if (weights_.empty()) throw InvalidParameter("Distribution: empty weight vector");
  check_probability_entries(weights_, "Distribution");
}

Distribution Distribution::uniform(std::size_t n) {
  if (n == 0) throw InvalidParameter("Distribution::uniform: n must be positive");
  return Distribution(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

Distribution Distribution::point_mass(std::size_t n, std::size_t state) {
  if (state >= n) throw InvalidParameter("Distribution::point_mass: state out of range");
  std::vector<double> w(n, 0.0);
  w[state] = 1.0;
  return Distribution(std::move(w));
}

FiniteKernel::FiniteKernel(Matrix rows) : rows_(std::move(rows)) {
  if (rows_.rows() == 0 || rows_.rows() != rows_.cols())
    throw InvalidParameter("FiniteKernel: matrix must be square and nonempty");
  const std::size_t n = rows_.rows();
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double p = rows_(i, j);
      if (!(p >= 0.0 && p <= 1.0))
        throw InvalidParameter("FiniteKernel: entry outside [0, 1] at row " + std::to_string(i));
    }
    for (std::size_t j = 0; j < n; ++j) sum += rows_(i, j);
    if (std::abs(sum - 1.0) > kSumTolerance)
      throw InvalidParameter("FiniteKernel: row " + std::to_string(i) + " sums to " +
                             std::to_string(sum));
  }
}

FiniteKernel FiniteKernel::identity(std::size_t n) { return FiniteKernel(Matrix::identity(n)); }

Ar1Spec::Ar1Spec(double theta_in, double omega_in) : theta(theta_in), omega(omega_in) {
  if (!(theta >= 0.0 && theta < 1.0)) throw InvalidParameter("Ar1Spec: theta must be in [0, 1)");
  if (!(omega > 0.0)) throw InvalidParameter("Ar1Spec: omega must be positive");
}

FiniteKernel lazy_walk_kernel(std::size_t w) {
  if (w < 3) throw InvalidParameter("lazy_walk_kernel: w must be at least 3");
  Matrix p(w, w);
  for (std::size_t x = 0; x < w; ++x) {
    p(x, x) = 0.5;
    p(x, (x + 1) % w) = 0.25;
    p(x, (x + w - 1) % w) = 0.25;
  }
  return FiniteKernel(std::move(p));
}

std::vector<std::size_t> simulate_finite(const FiniteKernel& kernel, const Distribution& init,
                                         std::size_t length, std::uint64_t seed) {
  if (init.size() != kernel.size())
    throw InvalidParameter("simulate_finite: init dimension does not match kernel");
  if (length == 0) throw InvalidParameter("simulate_finite: length must be positive");

  SplitMix64 rng(seed);
  const std::size_t n = kernel.size();
  auto sample_from = [&](auto weight_at) {
    const double u = rng.uniform01();
    double acc = 0.0;
    for (std::size_t j = 0; j + 1 < n; ++j) {
      acc += weight_at(j);
      if (u < acc) return j;
    }
    return n - 1;
  };

  std::vector<std::size_t> states(length);
  states[0] = sample_from([&](std::size_t j) { return init[j]; });
  for (std::size_t t = 1; t < length; ++t) {
    const std::size_t from = states[t - 1];
    states[t] = sample_from([&](std::size_t j) { return kernel(from, j); });
  }
  return states;
}

std::vector<double> simulate_ar1(const Ar1Spec& spec, double x0, std::size_t length,
                                 std::uint64_t seed) {
  if (length == 0) throw InvalidParameter("simulate_ar1: length must be positive");
  GaussianSampler noise(seed);
  std::vector<double> xs(length);
  xs[0] = x0;
  for (std::size_t t = 1; t < length; ++t)
    xs[t] = spec.theta * xs[t - 1] + noise.next(0.0, spec.omega);
  return xs;
}

Distribution stationary_distribution(const FiniteKernel& kernel) {
  const std::size_t n = kernel.size();
  Matrix power = kernel.rows();
  constexpr int kMaxSquarings = 64;

  for (int iter = 0; iter <= kMaxSquarings; ++iter) {
    // Converged when all rows coincide, i.e. the power is (nearly) rank one.
    double spread = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double lo = power(0, j), hi = power(0, j);
      for (std::size_t i = 1; i < n; ++i) {
        lo = std::min(lo, power(i, j));
        hi = std::max(hi, power(i, j));
      }
      spread = std::max(spread, hi - lo);
    }
    if (spread < kSumTolerance) {
      std::vector<double> pi(n, 0.0);
      for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += power(i, j);
        pi[j] = acc / static_cast<double>(n);
      }
      double sum = 0.0;
      for (double v : pi) sum += v;
      for (double& v : pi) v /= sum;
      return Distribution(std::move(pi));
    }
    if (iter == kMaxSquarings) break;
    power = multiply(power, power);
    // Renormalize rows to counter floating-point drift across squarings.
    for (std::size_t i = 0; i < n; ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < n; ++j) sum += power(i, j);
      for (std::size_t j = 0; j < n; ++j) power(i, j) /= sum;
    }
  }
  throw NotErgodic("stationary_distribution: no convergence within 64 squarings");
}

double tv_distance(const Distribution& p, const Distribution& q) {
  if (p.size() != q.size()) throw InvalidParameter("tv_distance: dimension mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += std::abs(p[i] - q[i]);
  return 0.5 * sum;
}

long mixing_time(const FiniteKernel& kernel, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw InvalidParameter("mixing_time: eps must be in (0, 1)");
  const Distribution pi = stationary_distribution(kernel);
  const std::size_t n = kernel.size();

  constexpr long kMaxSteps = 1000000;
  Matrix power = kernel.rows();
  for (long t = 1; t <= kMaxSteps; ++t) {
    double worst = 0.0;
    for (std::size_t z = 0; z < n; ++z) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += std::abs(power(z, j) - pi[j]);
      worst = std::max(worst, 0.5 * acc);
    }
    if (worst <= eps) return t;
    power = multiply(power, kernel.rows());
  }
  throw NotErgodic("mixing_time: worst-case TV still above eps after 10^6 steps");
}

SpectralGap spectral_gap_exact(const FiniteKernel& kernel, const Distribution& pi) {
  const std::size_t n = kernel.size();
  if (pi.size() != n) throw InvalidParameter("spectral_gap_exact: pi dimension mismatch");
  for (std::size_t i = 0; i < n; ++i)
    if (!(pi[i] > 0.0))
      throw InvalidParameter("spectral_gap_exact: pi must be strictly positive");

  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(pi[i] * kernel(i, j) - pi[j] * kernel(j, i)) > kReversibilityTolerance)
        throw NotReversible("spectral_gap_exact: detailed balance fails at (" +
                            std::to_string(i) + ", " + std::to_string(j) + ")");

  Matrix sym(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      sym(i, j) = std::sqrt(pi[i] / pi[j]) * kernel(i, j);
  // Detailed balance makes sym symmetric up to roundoff; enforce it exactly.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double avg = 0.5 * (sym(i, j) + sym(j, i));
      sym(i, j) = avg;
      sym(j, i) = avg;
    }

  const std::vector<double> eigenvalues = jacobi_eigenvalues(std::move(sym));
  const double lambda2 = n > 1 ? eigenvalues[1] : eigenvalues[0];
  const double lambda_min = eigenvalues.back();
  return SpectralGap{lambda2, lambda_min, std::max(lambda2, std::abs(lambda_min))};
}

Ar1Marginal ar1_marginal(const Ar1Spec& spec, double x, long t) {
  if (t < 1) throw InvalidParameter("ar1_marginal: t must be at least 1");
  const double theta_t = std::pow(spec.theta, static_cast<double>(t));
  const double omega2 = spec.omega * spec.omega;
  double variance;
  if (spec.theta == 0.0) {
    variance = omega2;
  } else {
    variance = omega2 * (1.0 - theta_t * theta_t) / (1.0 - spec.theta * spec.theta);
  }
  return Ar1Marginal{theta_t * x, variance};
}

double ar1_beta_bound(const Ar1Spec& spec, long a) {
  if (a < 1) throw InvalidParameter("ar1_beta_bound: a must be at least 1");
  const double theta2 = spec.theta * spec.theta;
  return std::pow(spec.theta, static_cast<double>(a)) *
         std::sqrt((1.0 - theta2) / (2.0 * spec.omega * spec.omega));
}

}  // namespace markovcp::chains
