#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "markovcp/chains.hpp"

namespace markovcp::conformal {

// Point predictor mapping a covariate to a real response.
using Model = std::function<double(double)>;
// Fits a point predictor on a training trajectory.
using Fitter = std::function<Model(const chains::Trajectory&)>;

// Sentinel quantile when the requested rank exceeds the calibration size:
// the prediction set degenerates to the whole real line.
inline constexpr double kInfiniteQuantile = std::numeric_limits<double>::infinity();

// Fitted predictor plus a calibrated score quantile.
struct ConformalPredictor {
  Model model;
  double q_hat = 0.0;  // calibrated quantile, possibly +infinity
  double alpha = 0.1;
  std::size_t calib_size = 0;  // effective calibration count m

  bool has_finite_quantile() const noexcept { return std::isfinite(q_hat); }
};

struct PredictionInterval {
  double lower;
  double upper;

  bool is_bounded() const noexcept { return std::isfinite(lower) && std::isfinite(upper); }
  double length() const noexcept { return upper - lower; }
};

// Absolute residuals |y_t - model(x_t)| in data order.
std::vector<double> residual_scores(const Model& model, const chains::Trajectory& data);

// ceil((n+1)(1-alpha)) with a small tolerance so that values within 1e-9 of
// an integer are treated as that integer.
long quantile_rank(std::size_t n, double alpha);

// k-th smallest element (1-based). k must be in [1, scores.size()].
double kth_smallest(std::vector<double> scores, long k);

// The ceil((n+1)(1-alpha))-th smallest score, or kInfiniteQuantile when the
// rank exceeds n.
double empirical_quantile(const std::vector<double>& scores, double alpha);

// Split conformal prediction with a sequential train/calibration split.
ConformalPredictor split_cp(const chains::Trajectory& train, const chains::Trajectory& calib,
                            double alpha, const Fitter& fitter);

// [model(x) - q_hat, model(x) + q_hat]; the whole real line when q_hat is
// infinite.
PredictionInterval predict_interval(const ConformalPredictor& predictor, double x);

// Keeps indices 0, K, 2K, ... of the calibration trajectory. The output has
// ceil(|calib| / K) entries.
chains::Trajectory thin(const chains::Trajectory& calib, std::size_t K);

struct CorrectedRank {
  long rank;           // in [1, m+1]; m+1 encodes the infinite-quantile sentinel
  double alpha_prime;  // 1 - rank/(m+1)
};

// The order-statistic rank whose achievable coverage k/(m+1) is nearest to
// 1-alpha, ties broken toward the larger (more conservative) rank.
CorrectedRank corrected_rank(std::size_t m, double alpha);

// K-split conformal prediction: calibrates on every K-th score. With
// corrected=true the corrected_rank order statistic is used instead of
// ceil((m+1)(1-alpha)).
ConformalPredictor ksplit_cp(const chains::Trajectory& train, const chains::Trajectory& calib,
                             double alpha, std::size_t K, bool corrected, const Fitter& fitter);

struct RollingResult {
  std::size_t start_index = 0;           // first scored time step
  std::vector<std::uint8_t> covered;     // one indicator per step >= start_index
  std::vector<double> q_hats;            // quantile used at each step
  std::size_t infinite_count = 0;        // steps whose quantile was infinite

  double coverage_mean() const;
};

// Rolling-window conformal coverage over a precomputed score stream: at each
// time t >= train_len + calib_len the scores in [t - calib_len, t) are
// calibrated (thinned by K, optionally with the corrected rank) and the step
// counts as covered when scores[t] <= q_hat.
RollingResult rolling_cp(const std::vector<double>& scores, std::size_t train_len,
                         std::size_t calib_len, double alpha, std::size_t K,
                         bool corrected = false);

}  // namespace markovcp::conformal
