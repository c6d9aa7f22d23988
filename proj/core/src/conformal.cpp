#include "markovcp/conformal.hpp"

#include <algorithm>
#include <cmath>

#include "markovcp/errors.hpp"

namespace markovcp::conformal {

namespace {

// Rank tolerance: (n+1)(1-alpha) within 1e-9 of an integer is that integer.
long ceil_with_tolerance(double value) {
  const double floored = std::floor(value);
  if (value - floored <= 1e-9) return static_cast<long>(floored);
  return static_cast<long>(floored) + 1;
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidParameter("alpha must be in (0, 1)");
}

}  // namespace

std::vector<double> residual_scores(const Model& model, const chains::Trajectory& data) {
  if (data.covariates.size() != data.responses.size())
    throw InvalidParameter("residual_scores: covariate/response length mismatch");
  if (data.size() == 0) throw InvalidParameter("residual_scores: empty trajectory");
  std::vector<double> scores(data.size());
  for (std::size_t t = 0; t < data.size(); ++t)
    scores[t] = std::abs(data.responses[t] - model(data.covariates[t]));
  return scores;
}

long quantile_rank(std::size_t n, double alpha) {
  check_alpha(alpha);
  return ceil_with_tolerance(static_cast<double>(n + 1) * (1.0 - alpha));
}

double kth_smallest(std::vector<double> scores, long k) {
  if (k < 1 || static_cast<std::size_t>(k) > scores.size())
    throw InvalidParameter("kth_smallest: rank out of range");
  auto nth = scores.begin() + (k - 1);
  std::nth_element(scores.begin(), nth, scores.end());
  return *nth;
}

double empirical_quantile(const std::vector<double>& scores, double alpha) {
  if (scores.empty()) throw InvalidParameter("empirical_quantile: empty score vector");
  const long k = quantile_rank(scores.size(), alpha);
  if (static_cast<std::size_t>(k) > scores.size()) return kInfiniteQuantile;
  return kth_smallest(scores, k);
}

ConformalPredictor split_cp(const chains::Trajectory& train, const chains::Trajectory& calib,
                            double alpha, const Fitter& fitter) {
  check_alpha(alpha);
  if (train.size() == 0 || calib.size() == 0)
    throw InvalidParameter("split_cp: train and calibration data must be nonempty");
  Model model = fitter(train);
  const double q_hat = empirical_quantile(residual_scores(model, calib), alpha);
  return ConformalPredictor{std::move(model), q_hat, alpha, calib.size()};
}

PredictionInterval predict_interval(const ConformalPredictor& predictor, double x) {
  if (!predictor.has_finite_quantile())
    return PredictionInterval{-std::numeric_limits<double>::infinity(),
                              std::numeric_limits<double>::infinity()};
  const double center = predictor.model(x);
  return PredictionInterval{center - predictor.q_hat, center + predictor.q_hat};
}

chains::Trajectory thin(const chains::Trajectory& calib, std::size_t K) {
  if (K < 1) throw InvalidParameter("thin: K must be at least 1");
  chains::Trajectory out;
  out.origin_time = calib.origin_time;
  out.covariates.reserve((calib.size() + K - 1) / K);
  out.responses.reserve((calib.size() + K - 1) / K);
  for (std::size_t i = 0; i < calib.size(); i += K) {
    out.covariates.push_back(calib.covariates[i]);
    out.responses.push_back(calib.responses[i]);
  }
  return out;
}

CorrectedRank corrected_rank(std::size_t m, double alpha) {
  check_alpha(alpha);
  if (m == 0) throw InvalidParameter("corrected_rank: m must be positive");
  const double denom = static_cast<double>(m + 1);
  const double target = (1.0 - alpha) * denom;

  long k_low = static_cast<long>(std::floor(target));
  long k_high = k_low + 1;
  k_low = std::clamp<long>(k_low, 1, static_cast<long>(m + 1));
  k_high = std::clamp<long>(k_high, 1, static_cast<long>(m + 1));

  const double d_low = std::abs(static_cast<double>(k_low) / denom - (1.0 - alpha));
  const double d_high = std::abs(static_cast<double>(k_high) / denom - (1.0 - alpha));
  // Ties go to the larger rank (over-coverage rather than under-coverage).
  const long k = (d_high <= d_low + 1e-12) ? k_high : k_low;
  return CorrectedRank{k, 1.0 - static_cast<double>(k) / denom};
}

ConformalPredictor ksplit_cp(const chains::Trajectory& train, const chains::Trajectory& calib,
                             double alpha, std::size_t K, bool corrected, const Fitter& fitter) {
  check_alpha(alpha);
  if (K < 1) throw InvalidParameter("ksplit_cp: K must be at least 1");
  if (train.size() == 0 || calib.size() == 0)
    throw InvalidParameter("ksplit_cp: train and calibration data must be nonempty");

  Model model = fitter(train);
  const chains::Trajectory thinned = thin(calib, K);
  const std::vector<double> scores = residual_scores(model, thinned);
  const std::size_t m = scores.size();

  const long k = corrected ? corrected_rank(m, alpha).rank : quantile_rank(m, alpha);
  const double q_hat =
      (static_cast<std::size_t>(k) > m) ? kInfiniteQuantile : kth_smallest(scores, k);
  return ConformalPredictor{std::move(model), q_hat, alpha, m};
}

double RollingResult::coverage_mean() const {
  if (covered.empty()) return 0.0;
  double acc = 0.0;
  for (auto c : covered) acc += c;
  return acc / static_cast<double>(covered.size());
}

RollingResult rolling_cp(const std::vector<double>& scores, std::size_t train_len,
                         std::size_t calib_len, double alpha, std::size_t K, bool corrected) {
  check_alpha(alpha);
  if (K < 1) throw InvalidParameter("rolling_cp: K must be at least 1");
  if (calib_len < 1) throw InvalidParameter("rolling_cp: calibration window must be nonempty");
  if (scores.size() <= train_len + calib_len)
    throw InvalidParameter("rolling_cp: window longer than score stream");

  const std::size_t start = train_len + calib_len;
  const std::size_t steps = scores.size() - start;
  RollingResult result;
  result.start_index = start;
  result.covered.resize(steps);
  result.q_hats.resize(steps);

  const std::size_t m = (calib_len + K - 1) / K;
  const long k = corrected ? corrected_rank(m, alpha).rank : quantile_rank(m, alpha);

  std::vector<double> window;
  window.reserve(m);
  for (std::size_t t = start; t < scores.size(); ++t) {
    window.clear();
    for (std::size_t i = t - calib_len; i < t; i += K) window.push_back(scores[i]);
    double q_hat;
    if (static_cast<std::size_t>(k) > window.size()) {
      q_hat = kInfiniteQuantile;
      ++result.infinite_count;
    } else {
      q_hat = kth_smallest(window, k);
    }
    result.q_hats[t - start] = q_hat;
    result.covered[t - start] = scores[t] <= q_hat ? 1 : 0;
  }
  return result;
}

}  // namespace markovcp::conformal
