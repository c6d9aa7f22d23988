#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "markovcp/chains.hpp"
#include "markovcp/conformal.hpp"

namespace markovcp::harness {

// Lazy random walk covariates with linear responses slope * x + Normal(0,
// noise_sigma^2). noise_sigma = 0 produces a noiseless chain (used to check
// that intervals degenerate).
struct LazyWalkChain {
  std::size_t w = 20;
  double slope = 0.5;
  double noise_sigma = 1.0;
};

// AR(1) covariates predicting the next value: y_t = x_{t+1}.
struct Ar1Chain {
  double theta = 0.9;
  double omega = 1.0;
};

using ChainSpec = std::variant<LazyWalkChain, Ar1Chain>;

enum class Method { split, ksplit, ksplit_corrected };

std::string to_string(Method method);
std::optional<Method> method_from_string(const std::string& name);

struct FixedK {
  long k = 1;
};
struct KStarPolicy {};    // K from the exact chain rate
struct AdaptivePolicy {};  // K from data-driven rate estimates

using KPolicy = std::variant<FixedK, KStarPolicy, AdaptivePolicy>;

struct ExperimentConfig {
  ChainSpec chain = LazyWalkChain{};
  long train_size = 2000;  // N_train
  long calib_size = 2000;  // n_cal
  double alpha = 0.1;
  std::vector<Method> methods = {Method::split, Method::ksplit, Method::ksplit_corrected};
  KPolicy k_policy = KStarPolicy{};
  long trials = 500;
  std::uint64_t master_seed = 0;
};

struct MethodReport {
  double coverage_mean = 0.0;
  double coverage_se = 0.0;
  double mean_halfwidth = 0.0;           // over finite intervals only
  double relative_length_error = 0.0;    // median of |q_hat - q_alpha| / q_alpha
  long k_used = 1;                       // median across trials for adaptive policies
  long trials = 0;
  long infinite_intervals = 0;

  // Per-trial samples, kept for diagnostics and tests; not serialized.
  std::vector<double> q_hats;
  std::vector<std::uint8_t> covered;
};

struct CoverageReport {
  std::vector<std::pair<Method, MethodReport>> methods;
  double q_alpha = 0.0;  // optimal half-width under the chain's noise law

  const MethodReport* find(Method method) const;
};

// Ordinary least squares line fit. Throws SingularFit when all covariates
// coincide.
conformal::Model fit_linear(const chains::Trajectory& train);

// No-intercept OLS of x_{t+1} on x_t over a scalar series; the returned
// model is x -> theta_hat * x.
conformal::Model fit_ar_predictor(const std::vector<double>& series);

// Inverse standard-normal CDF: rational approximation polished by one Newton
// step on the erfc-based CDF, |error| well below 1e-9.
double inverse_normal_cdf(double p);

// Optimal symmetric half-width sigma * Phi^{-1}(1 - alpha/2) for Gaussian
// noise with standard deviation sigma.
double optimal_halfwidth_gaussian(double alpha, double sigma);

// Monte Carlo coverage experiment: per trial, simulate one trajectory of
// length N_train + n_cal + 1 from the chain, split sequentially, fit,
// calibrate per method, and test coverage of the final point. Trials derive
// their generators from (master_seed, trial index) and may run on several
// threads; the report is identical for any thread count. threads = 0 picks
// the hardware concurrency.
CoverageReport run_coverage_experiment(const ExperimentConfig& config, unsigned threads = 0);

struct RollingMethodSummary {
  Method method = Method::split;
  long k_used = 1;
  double coverage_mean = 0.0;
  long infinite_intervals = 0;
  std::vector<std::uint8_t> covered;
  std::vector<double> q_hats;
};

struct RollingSummary {
  std::size_t window_count = 0;
  std::size_t start_index = 0;          // first scored index in the returns series
  double rho_hat = 0.0;                 // 0 when the K policy did not need an estimate
  std::vector<RollingMethodSummary> methods;
};

// Rolling-window experiment on a strictly positive series: computes one-step
// returns, scores them against a zero-return prediction, and applies
// rolling_cp per method. kstar and adaptive policies estimate the rate from
// the returns' autocorrelation decay.
RollingSummary run_rolling_experiment(const std::vector<double>& series, std::size_t train_len,
                                      std::size_t calib_len, double alpha, const KPolicy& policy,
                                      const std::vector<Method>& methods,
                                      std::size_t max_lag = 50);

}  // namespace markovcp::harness
