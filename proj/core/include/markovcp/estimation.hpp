#pragma once

#include <cstddef>
#include <vector>

#include "markovcp/chains.hpp"
#include "markovcp/linalg.hpp"

namespace markovcp::estimation {

// Transition counts and row-normalized empirical kernel built from one
// observed state sequence.
struct EmpiricalKernel {
  std::size_t size = 0;
  std::vector<long> counts;  // row-major size x size transition counts
  Matrix p_hat;              // row-stochastic for visited rows
  chains::Distribution pi_hat;
  std::vector<long> visits;  // row sums of counts

  long count(std::size_t from, std::size_t to) const { return counts[from * size + to]; }
};

// Counts one-step transitions of the sequence. Every declared state must be
// visited among the first length-1 elements; otherwise InsufficientData is
// thrown (smoothing would silently bias the spectral estimate).
EmpiricalKernel empirical_kernel(const std::vector<std::size_t>& states, std::size_t num_states);

// Spectral point estimate of the chain rate: the second-largest-magnitude
// eigenvalue of the additive symmetrization of D^{1/2} p_hat D^{-1/2},
// D = diag(pi_hat), clipped into (1e-9, 1 - 1e-9).
double estimate_rho(const EmpiricalKernel& kernel);

// Adaptive thinning step ln(n) / ln(1/rho_hat), rounded, floored at 1.
long adaptive_k(long n, double rho_hat);

// One-step relative returns x_{t+1}/x_t - 1 of a strictly positive series.
std::vector<double> returns(const std::vector<double>& series);

// Sample autocorrelations at lags 1..max_lag.
std::vector<double> autocorrelations(const std::vector<double>& series, std::size_t max_lag);

// Geometric decay rate of a (positive) autocorrelation profile, by least
// squares on the log values. acf[h-1] holds the lag-h autocorrelation; lags
// at or below the 0.01 positivity guard are dropped, and fewer than two
// usable lags raise InsufficientData.
double rho_from_autocorr(const std::vector<double>& acf);

// rho_from_autocorr applied to the series' sample autocorrelations.
// Requires max_lag >= 2 and series length > 4 * max_lag.
double estimate_rho_autocorr(const std::vector<double>& series, std::size_t max_lag);

}  // namespace markovcp::estimation
