#pragma once

#include <cstdint>
#include <vector>

#include "markovcp/linalg.hpp"

namespace markovcp::chains {

// Probability vector over a finite state space. Entries must lie in [0,1]
// and sum to 1 within 1e-12.
class Distribution {
 public:
  explicit Distribution(std::vector<double> weights);

  static Distribution uniform(std::size_t n);
  static Distribution point_mass(std::size_t n, std::size_t state);

  std::size_t size() const noexcept { return weights_.size(); }
  double operator[](std::size_t i) const noexcept { return weights_[i]; }
  const std::vector<double>& weights() const noexcept { return weights_; }

 private:
  std::vector<double> weights_;
};

// Row-stochastic transition matrix. Every entry in [0,1], every row sums
// to 1 within 1e-12.
class FiniteKernel {
 public:
  explicit FiniteKernel(Matrix rows);

  static FiniteKernel identity(std::size_t n);

  std::size_t size() const noexcept { return rows_.rows(); }
  double operator()(std::size_t from, std::size_t to) const noexcept { return rows_(from, to); }
  const Matrix& rows() const noexcept { return rows_; }

 private:
  Matrix rows_;
};

// Gaussian AR(1) recursion x' = theta * x + Normal(0, omega^2).
struct Ar1Spec {
  double theta;
  double omega;
  Ar1Spec(double theta, double omega);
};

// One chain realization as (covariate, response) pairs in time order.
// origin_time records the time index of the first pair (the convention in
// this library is that training data ends just before time 1).
struct Trajectory {
  std::vector<double> covariates;
  std::vector<double> responses;
  long origin_time = 1;

  std::size_t size() const noexcept { return covariates.size(); }
};

// Lazy random walk on Z/wZ: stay with probability 1/2, step to either
// neighbour with probability 1/4. Requires w >= 3 so the neighbours differ.
FiniteKernel lazy_walk_kernel(std::size_t w);

// Samples a state sequence of the given length; the first state is drawn
// from `init` and each subsequent state from the row of the current one.
// Deterministic given the seed.
std::vector<std::size_t> simulate_finite(const FiniteKernel& kernel, const Distribution& init,
                                         std::size_t length, std::uint64_t seed);

// Samples the AR(1) path [x0, x1, ..., x_{length-1}] with x_{t+1} =
// theta * x_t + Normal(0, omega^2). Deterministic given the seed.
std::vector<double> simulate_ar1(const Ar1Spec& spec, double x0, std::size_t length,
                                 std::uint64_t seed);

// Stationary distribution by repeated squaring of the kernel until all rows
// agree within 1e-12. Throws NotErgodic if 64 squarings do not converge
// (reducible or periodic chains never do).
Distribution stationary_distribution(const FiniteKernel& kernel);

// Total variation distance, computed as half the L1 distance.
double tv_distance(const Distribution& p, const Distribution& q);

// Smallest t >= 1 such that the worst-start total variation to stationarity
// is at most eps. Capped at 10^6 steps to bound runtime on near-periodic
// inputs; the cap throws NotErgodic.
long mixing_time(const FiniteKernel& kernel, double eps = 0.25);

struct SpectralGap {
  double lambda2;     // second-largest eigenvalue
  double lambda_min;  // smallest eigenvalue
  double rho;         // max(lambda2, |lambda_min|)
};

// Eigenvalues of the reversible kernel's symmetrization D^{1/2} P D^{-1/2}
// with D = diag(pi). Detailed balance is checked within 1e-10; failure
// throws NotReversible.
SpectralGap spectral_gap_exact(const FiniteKernel& kernel, const Distribution& pi);

struct Ar1Marginal {
  double mean;
  double variance;
};

// Law of x_t given x_0 = x: Normal(theta^t x, omega^2 (1-theta^{2t})/(1-theta^2)).
Ar1Marginal ar1_marginal(const Ar1Spec& spec, double x, long t);

// Analytic bound on the AR(1) beta-mixing coefficient at separation a:
// theta^a * sqrt((1-theta^2) / (2 omega^2)).
double ar1_beta_bound(const Ar1Spec& spec, long a);

}  // namespace markovcp::chains
