#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "markovcp/conformal.hpp"
#include "markovcp/errors.hpp"
#include "markovcp/rng.hpp"

using namespace markovcp;
using namespace markovcp::conformal;
using markovcp::chains::Trajectory;

namespace {

const Model kZeroModel = [](double) { return 0.0; };
const Fitter kZeroFitter = [](const Trajectory&) { return kZeroModel; };

Trajectory with_scores(std::vector<double> scores) {
  Trajectory t;
  t.covariates.assign(scores.size(), 0.0);
  t.responses = std::move(scores);  // zero model makes scores = |responses|
  return t;
}

// Rank oracle: full sort, then index.
double sorted_rank(std::vector<double> scores, long k) {
  std::sort(scores.begin(), scores.end());
  return scores[static_cast<std::size_t>(k - 1)];
}

}  // namespace

TEST_SUITE("conformal") {

TEST_CASE("residual scores") {
  Trajectory t;
  t.covariates = {0.0, 0.0, 0.0};
  t.responses = {1.0, -2.0, 3.0};
  CHECK(residual_scores(kZeroModel, t) == std::vector<double>{1.0, 2.0, 3.0});

  const Model exact = [](double x) { return 2.0 * x; };
  Trajectory fitted;
  fitted.covariates = {1.0, 2.0, -1.0};
  fitted.responses = {2.0, 4.0, -2.0};
  for (double s : residual_scores(exact, fitted)) CHECK(s == 0.0);

  Trajectory pairs;
  pairs.covariates = {1.0, 2.0};
  pairs.responses = {3.0, 7.0};
  CHECK(residual_scores(exact, pairs) == std::vector<double>{1.0, 3.0});
}

TEST_CASE("empirical quantile ranks") {
  std::vector<double> nine{1, 2, 3, 4, 5, 6, 7, 8, 9};
  CHECK(quantile_rank(9, 0.1) == 9);
  CHECK(empirical_quantile(nine, 0.1) == sorted_rank(nine, 9));

  CHECK(quantile_rank(3, 0.5) == 2);
  CHECK(empirical_quantile({1, 2, 3}, 0.5) == 2.0);

  CHECK(quantile_rank(2, 0.1) == 3);
  CHECK(empirical_quantile({5, 7}, 0.1) == kInfiniteQuantile);

  CHECK_THROWS_AS(empirical_quantile({}, 0.1), InvalidParameter);
  CHECK_THROWS_AS(empirical_quantile({1.0}, 0.0), InvalidParameter);
}

TEST_CASE("empirical quantile monotonicity") {
  SplitMix64 rng(17);
  std::vector<double> scores(57);
  for (auto& s : scores) s = rng.uniform01();

  double prev = empirical_quantile(scores, 0.05);
  for (double alpha = 0.10; alpha < 0.95; alpha += 0.05) {
    const double q = empirical_quantile(scores, alpha);
    CHECK(q <= prev);
    prev = q;
  }

  const double base = empirical_quantile(scores, 0.2);
  std::vector<double> extended = scores;
  extended.push_back(1e9);  // a new maximum
  CHECK(empirical_quantile(extended, 0.2) >= base);
}

TEST_CASE("split conformal prediction") {
  Trajectory train = with_scores({1.0, 1.0, 1.0});

  // Constant calibration scores pin the quantile at that constant.
  ConformalPredictor constant = split_cp(train, with_scores({2.5, 2.5, 2.5, 2.5}), 0.5, kZeroFitter);
  CHECK(constant.q_hat == 2.5);
  CHECK(constant.calib_size == 4);

  // Exactly fitted model, half-normal scores: the 0.9 quantile of |N(0,1)|.
  GaussianSampler noise(123);
  Trajectory calib;
  for (int i = 0; i < 10000; ++i) {
    calib.covariates.push_back(0.0);
    calib.responses.push_back(noise.next());
  }
  ConformalPredictor halfnormal = split_cp(train, calib, 0.1, kZeroFitter);
  CHECK(std::abs(halfnormal.q_hat - 1.6448536269514722) < 0.05);

  ConformalPredictor overflow = split_cp(train, with_scores({1.0, 2.0}), 0.1, kZeroFitter);
  CHECK(overflow.q_hat == kInfiniteQuantile);
}

TEST_CASE("prediction intervals") {
  ConformalPredictor p{kZeroModel, 2.0, 0.1, 10};
  const PredictionInterval symmetric = predict_interval(p, 3.0);
  CHECK(symmetric.lower == -2.0);
  CHECK(symmetric.upper == 2.0);
  CHECK(symmetric.is_bounded());
  CHECK(symmetric.length() == 4.0);

  p.q_hat = 0.0;
  const PredictionInterval point = predict_interval(p, 3.0);
  CHECK(point.lower == point.upper);

  ConformalPredictor shifted{[](double) { return 1.5; }, 0.25, 0.1, 10};
  const PredictionInterval around = predict_interval(shifted, 0.0);
  CHECK(around.lower == doctest::Approx(1.25));
  CHECK(around.upper == doctest::Approx(1.75));

  p.q_hat = kInfiniteQuantile;
  CHECK_FALSE(predict_interval(p, 0.0).is_bounded());
}

TEST_CASE("finite intervals are centered at the model prediction") {
  SplitMix64 rng(55);
  for (int trial = 0; trial < 50; ++trial) {
    const double slope = 2.0 * rng.uniform01() - 1.0;
    const double q = 3.0 * rng.uniform01();
    const ConformalPredictor p{[slope](double x) { return slope * x; }, q, 0.1, 10};
    const double x = 10.0 * (rng.uniform01() - 0.5);
    const PredictionInterval interval = predict_interval(p, x);
    CHECK(0.5 * (interval.lower + interval.upper) == doctest::Approx(slope * x).epsilon(1e-12));
    CHECK(0.5 * interval.length() == doctest::Approx(q).epsilon(1e-12));
  }
}

TEST_CASE("thinning") {
  Trajectory calib;
  calib.covariates = {0, 1, 2, 3, 4, 5};
  calib.responses = {10, 11, 12, 13, 14, 15};

  const Trajectory same = thin(calib, 1);
  CHECK(same.covariates == calib.covariates);
  CHECK(same.responses == calib.responses);

  const Trajectory every_other = thin(calib, 2);
  CHECK(every_other.covariates == std::vector<double>{0, 2, 4});
  CHECK(every_other.responses == std::vector<double>{10, 12, 14});

  const Trajectory collapsed = thin(calib, 10);
  CHECK(collapsed.size() == 1);
  CHECK(collapsed.covariates[0] == 0.0);

  CHECK_THROWS_AS(thin(calib, 0), InvalidParameter);
}

TEST_CASE("corrected rank") {
  // m = 9, alpha = 0.25: target 7.5, tie resolved upward.
  const CorrectedRank tie = corrected_rank(9, 0.25);
  CHECK(tie.rank == 8);
  CHECK(tie.alpha_prime == doctest::Approx(0.2).epsilon(1e-12));

  // (m+1)(1-alpha) integer: corrected level equals the nominal one.
  const CorrectedRank exact = corrected_rank(9, 0.1);
  CHECK(exact.rank == 9);
  CHECK(exact.alpha_prime == doctest::Approx(0.1).epsilon(1e-12));

  // m = 4, alpha = 0.1: target 4.5, tie goes to the sentinel rank m+1.
  CHECK(corrected_rank(4, 0.1).rank == 5);
}

TEST_CASE("corrected rank enumeration oracle and invariants") {
  SplitMix64 rng(29);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 1 + rng() % 60;
    const double alpha = 0.01 + 0.49 * rng.uniform01();  // nominal miscoverage regime
    const CorrectedRank got = corrected_rank(m, alpha);

    long best = 1;
    double best_dist = std::abs(1.0 / (m + 1.0) - (1.0 - alpha));
    for (long k = 2; k <= static_cast<long>(m) + 1; ++k) {
      const double dist = std::abs(k / (m + 1.0) - (1.0 - alpha));
      if (dist <= best_dist + 1e-12) {
        best = k;
        best_dist = std::min(best_dist, dist);
      }
    }
    CHECK(got.rank == best);
    CHECK(std::abs(got.rank / (m + 1.0) - (1.0 - alpha)) <= 0.5 / (m + 1.0) + 1e-12);
    if (got.rank <= static_cast<long>(m)) {
      // alpha_prime reproduces the rank through the uncorrected formula.
      CHECK(quantile_rank(m, got.alpha_prime) == got.rank);
    } else {
      // Rank m+1 is the infinite-quantile sentinel; its achieved level is 0.
      CHECK(got.alpha_prime == 0.0);
    }
  }

  // Outside that regime the rank clamps at 1 and the half-step bound can
  // no longer hold.
  CHECK(corrected_rank(2, 0.95).rank == 1);
}

TEST_CASE("ksplit basics") {
  Trajectory train = with_scores({1.0, 2.0, 1.5});

  // Thinned scores 1..6 at alpha = 0.1: rank 7 of 6 overflows.
  CHECK(ksplit_cp(train, with_scores({1, 2, 3, 4, 5, 6}), 0.1, 1, false, kZeroFitter).q_hat ==
        kInfiniteQuantile);

  // Thinned scores 1..9 at alpha = 0.25, corrected: rank 8.
  CHECK(ksplit_cp(train, with_scores({1, 2, 3, 4, 5, 6, 7, 8, 9}), 0.25, 1, true, kZeroFitter)
            .q_hat == 8.0);
}

TEST_CASE("ksplit with K=1 uncorrected is bitwise split") {
  SplitMix64 rng(31);
  for (int trial = 0; trial < 25; ++trial) {
    Trajectory train, calib;
    const std::size_t n_train = 10 + rng() % 50;
    const std::size_t n_cal = 5 + rng() % 80;
    GaussianSampler g(rng());
    for (std::size_t i = 0; i < n_train; ++i) {
      train.covariates.push_back(g.next());
      train.responses.push_back(g.next());
    }
    for (std::size_t i = 0; i < n_cal; ++i) {
      calib.covariates.push_back(g.next());
      calib.responses.push_back(g.next());
    }
    const double alpha = 0.02 + 0.3 * rng.uniform01();

    const Fitter mean_fitter = [](const Trajectory& data) {
      double mean = 0.0;
      for (double y : data.responses) mean += y;
      mean /= static_cast<double>(data.size());
      return Model([mean](double) { return mean; });
    };

    const ConformalPredictor split = split_cp(train, calib, alpha, mean_fitter);
    const ConformalPredictor ksplit = ksplit_cp(train, calib, alpha, 1, false, mean_fitter);
    CHECK(split.q_hat == ksplit.q_hat);  // bitwise
    CHECK(split.calib_size == ksplit.calib_size);
  }
}

TEST_CASE("split coverage sandwich on exchangeable scores") {
  // Monte Carlo check of the two-sided marginal coverage guarantee.
  const std::size_t n = 100;
  const int trials = 4000;
  const double alpha = 0.1;
  SplitMix64 rng(2718);
  int covered = 0;
  std::vector<double> scores(n);
  for (int t = 0; t < trials; ++t) {
    for (auto& s : scores) s = rng.uniform01();
    const double test_score = rng.uniform01();
    if (test_score <= empirical_quantile(scores, alpha)) ++covered;
  }
  const double mean = static_cast<double>(covered) / trials;
  const double se = std::sqrt(0.9 * 0.1 / trials);
  CHECK(mean >= 1.0 - alpha - 3.0 * se);
  CHECK(mean <= 1.0 - alpha + 1.0 / (n + 1.0) + 3.0 * se);
}

TEST_CASE("rolling coverage") {
  // All-zero scores are always covered.
  const std::vector<double> zeros(200, 0.0);
  const RollingResult constant = rolling_cp(zeros, 20, 50, 0.1, 1);
  CHECK(constant.covered.size() == 130);
  CHECK(constant.coverage_mean() == 1.0);

  // Independent scores: marginal coverage near 0.9. Consecutive windows
  // overlap, so the tolerance is wider than the binomial 3 SE.
  SplitMix64 rng(404);
  std::vector<double> scores(50000);
  for (auto& s : scores) s = rng.uniform01();
  const RollingResult iid = rolling_cp(scores, 100, 100, 0.1, 1);
  CHECK(std::abs(iid.coverage_mean() - 0.9) < 0.02);

  // Thinning down to a single calibration point forces the full set.
  const RollingResult degenerate = rolling_cp(zeros, 10, 50, 0.1, 50);
  CHECK(degenerate.infinite_count == degenerate.covered.size());
  CHECK(degenerate.coverage_mean() == 1.0);

  CHECK_THROWS_AS(rolling_cp(zeros, 150, 60, 0.1, 1), InvalidParameter);
}

}  // TEST_SUITE
