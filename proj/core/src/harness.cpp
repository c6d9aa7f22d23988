#include "markovcp/harness.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <thread>

#include "markovcp/errors.hpp"
#include "markovcp/estimation.hpp"
#include "markovcp/rng.hpp"
#include "markovcp/theory.hpp"

namespace markovcp::harness {

namespace {

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  double m = values[mid];
  if (values.size() % 2 == 0) {
    const double lower = *std::max_element(values.begin(), values.begin() + mid);
    m = 0.5 * (m + lower);
  }
  return m;
}

long median_long(std::vector<long> values) {
  std::sort(values.begin(), values.end());
  return values[values.size() / 2];
}

struct TrialData {
  chains::Trajectory train;
  chains::Trajectory calib;
  double test_covariate = 0.0;
  double test_response = 0.0;
  // Raw training covariates, used by the adaptive rate estimators.
  std::vector<double> train_series;
  std::vector<std::size_t> train_states;
};

TrialData simulate_trial(const ExperimentConfig& config, std::uint64_t trial_seed) {
  const long total = config.train_size + config.calib_size + 1;
  TrialData data;

  if (const auto* lazy = std::get_if<LazyWalkChain>(&config.chain)) {
    const chains::FiniteKernel kernel = chains::lazy_walk_kernel(lazy->w);
    const chains::Distribution start = chains::Distribution::uniform(lazy->w);
    const auto states = chains::simulate_finite(kernel, start, static_cast<std::size_t>(total),
                                                stream_seed(trial_seed, 0));
    GaussianSampler noise(stream_seed(trial_seed, 1));
    std::vector<double> xs(states.size()), ys(states.size());
    for (std::size_t t = 0; t < states.size(); ++t) {
      xs[t] = static_cast<double>(states[t]);
      const double eps = lazy->noise_sigma == 0.0 ? 0.0 : noise.next(0.0, lazy->noise_sigma);
      ys[t] = lazy->slope * xs[t] + eps;
    }
    data.train_states.assign(states.begin(), states.begin() + config.train_size);
    data.train = {std::vector<double>(xs.begin(), xs.begin() + config.train_size),
                  std::vector<double>(ys.begin(), ys.begin() + config.train_size),
                  1 - config.train_size};
    data.calib = {std::vector<double>(xs.begin() + config.train_size, xs.end() - 1),
                  std::vector<double>(ys.begin() + config.train_size, ys.end() - 1), 1};
    data.test_covariate = xs.back();
    data.test_response = ys.back();
  } else {
    const auto& ar = std::get<Ar1Chain>(config.chain);
    const chains::Ar1Spec spec(ar.theta, ar.omega);
    GaussianSampler start(stream_seed(trial_seed, 1));
    const double stationary_sd = ar.omega / std::sqrt(1.0 - ar.theta * ar.theta);
    const double x0 = start.next(0.0, stationary_sd);
    // One extra value: the response of pair t is the next covariate.
    const auto xs = chains::simulate_ar1(spec, x0, static_cast<std::size_t>(total + 1),
                                         stream_seed(trial_seed, 0));
    data.train_series.assign(xs.begin(), xs.begin() + config.train_size + 1);
    data.train = {std::vector<double>(xs.begin(), xs.begin() + config.train_size),
                  std::vector<double>(xs.begin() + 1, xs.begin() + config.train_size + 1),
                  1 - config.train_size};
    data.calib = {
        std::vector<double>(xs.begin() + config.train_size, xs.end() - 2),
        std::vector<double>(xs.begin() + config.train_size + 1, xs.end() - 1), 1};
    data.test_covariate = xs[xs.size() - 2];
    data.test_response = xs.back();
  }
  return data;
}

conformal::Fitter make_fitter(const ExperimentConfig& config) {
  if (std::holds_alternative<LazyWalkChain>(config.chain)) {
    return [](const chains::Trajectory& train) { return fit_linear(train); };
  }
  return [](const chains::Trajectory& train) {
    // y_t = x_{t+1}: the training pairs are consecutive series values.
    std::vector<double> series = train.covariates;
    series.push_back(train.responses.back());
    return fit_ar_predictor(series);
  };
}

double exact_rate(const ExperimentConfig& config) {
  if (const auto* lazy = std::get_if<LazyWalkChain>(&config.chain)) {
    const chains::FiniteKernel kernel = chains::lazy_walk_kernel(lazy->w);
    const chains::Distribution pi = chains::stationary_distribution(kernel);
    return chains::spectral_gap_exact(kernel, pi).rho;
  }
  return std::get<Ar1Chain>(config.chain).theta;
}

double noise_sigma(const ExperimentConfig& config) {
  if (const auto* lazy = std::get_if<LazyWalkChain>(&config.chain)) return lazy->noise_sigma;
  return std::get<Ar1Chain>(config.chain).omega;
}

long adaptive_k_for_trial(const ExperimentConfig& config, const TrialData& data) {
  if (std::holds_alternative<LazyWalkChain>(config.chain)) {
    const auto kernel =
        estimation::empirical_kernel(data.train_states, std::get<LazyWalkChain>(config.chain).w);
    return estimation::adaptive_k(config.calib_size, estimation::estimate_rho(kernel));
  }
  const std::size_t quarter = data.train_series.size() / 5;
  const std::size_t max_lag = std::clamp<std::size_t>(quarter > 0 ? quarter - 1 : 2, 2, 20);
  const double rho_hat = estimation::estimate_rho_autocorr(data.train_series, max_lag);
  return estimation::adaptive_k(config.calib_size, rho_hat);
}

struct TrialOutcome {
  std::vector<double> q_hats;           // one per configured method
  std::vector<std::uint8_t> covered;
  long k_used = 1;
};

void validate(const ExperimentConfig& config) {
  if (config.train_size < 1 || config.calib_size < 1)
    throw InvalidParameter("run_coverage_experiment: train and calibration sizes must be positive");
  if (config.trials < 1) throw InvalidParameter("run_coverage_experiment: trials must be positive");
  if (!(config.alpha > 0.0 && config.alpha < 1.0))
    throw InvalidParameter("run_coverage_experiment: alpha must be in (0, 1)");
  if (config.methods.empty())
    throw InvalidParameter("run_coverage_experiment: at least one method required");
  if (const auto* fixed = std::get_if<FixedK>(&config.k_policy)) {
    if (fixed->k < 1) throw InvalidParameter("run_coverage_experiment: fixed K must be positive");
  }
}

}  // namespace

std::string to_string(Method method) {
  switch (method) {
    case Method::split: return "split";
    case Method::ksplit: return "ksplit";
    case Method::ksplit_corrected: return "ksplit_corrected";
  }
  return "unknown";
}

std::optional<Method> method_from_string(const std::string& name) {
  if (name == "split") return Method::split;
  if (name == "ksplit") return Method::ksplit;
  if (name == "ksplit_corrected") return Method::ksplit_corrected;
  return std::nullopt;
}

const MethodReport* CoverageReport::find(Method method) const {
  for (const auto& [m, report] : methods)
    if (m == method) return &report;
  return nullptr;
}

conformal::Model fit_linear(const chains::Trajectory& train) {
  const std::size_t n = train.size();
  if (n < 2 || train.responses.size() != n)
    throw InvalidParameter("fit_linear: need at least two (x, y) pairs");

  double x_mean = 0.0, y_mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    x_mean += train.covariates[i];
    y_mean += train.responses[i];
  }
  x_mean /= static_cast<double>(n);
  y_mean /= static_cast<double>(n);

  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = train.covariates[i] - x_mean;
    sxx += dx * dx;
    sxy += dx * (train.responses[i] - y_mean);
  }
  if (sxx == 0.0) throw SingularFit("fit_linear: all covariates are equal");

  const double slope = sxy / sxx;
  const double intercept = y_mean - slope * x_mean;
  return [slope, intercept](double x) { return slope * x + intercept; };
}

conformal::Model fit_ar_predictor(const std::vector<double>& series) {
  if (series.size() < 3) throw InvalidParameter("fit_ar_predictor: need at least three values");
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t t = 0; t + 1 < series.size(); ++t) {
    sxx += series[t] * series[t];
    sxy += series[t] * series[t + 1];
  }
  if (sxx == 0.0) throw SingularFit("fit_ar_predictor: series is identically zero");
  const double theta_hat = sxy / sxx;
  return [theta_hat](double x) { return theta_hat * x; };
}

double inverse_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidParameter("inverse_normal_cdf: p must be in (0, 1)");

  // Acklam's rational approximation, |relative error| < 1.2e-9.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  // One Newton step against the erfc-based CDF.
  const double cdf = 0.5 * std::erfc(-x / std::sqrt(2.0));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * 3.14159265358979323846);
  if (pdf > 0.0) x -= (cdf - p) / pdf;
  return x;
}

double optimal_halfwidth_gaussian(double alpha, double sigma) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw InvalidParameter("optimal_halfwidth_gaussian: alpha must be in (0, 1)");
  if (!(sigma >= 0.0)) throw InvalidParameter("optimal_halfwidth_gaussian: sigma must be >= 0");
  if (sigma == 0.0) return 0.0;
  return sigma * inverse_normal_cdf(1.0 - alpha / 2.0);
}

CoverageReport run_coverage_experiment(const ExperimentConfig& config, unsigned threads) {
  validate(config);

  // kstar resolves once from the exact chain rate; adaptive resolves per
  // trial from that trial's training data.
  const bool needs_thinning = std::any_of(
      config.methods.begin(), config.methods.end(), [](Method m) { return m != Method::split; });
  long fixed_k = 1;
  bool adaptive = false;
  if (needs_thinning) {
    if (const auto* fixed = std::get_if<FixedK>(&config.k_policy)) {
      fixed_k = fixed->k;
    } else if (std::holds_alternative<KStarPolicy>(config.k_policy)) {
      const double rho = exact_rate(config);
      fixed_k = rho > 0.0 ? theory::k_star(config.calib_size, rho).rounded : 1;
    } else {
      adaptive = true;
    }
  }

  const conformal::Fitter fitter = make_fitter(config);
  const double q_alpha = optimal_halfwidth_gaussian(config.alpha, noise_sigma(config));

  std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(config.trials));
  auto run_range = [&](long begin, long end) {
    for (long trial = begin; trial < end; ++trial) {
      const std::uint64_t trial_seed = stream_seed(config.master_seed, static_cast<std::uint64_t>(trial));
      const TrialData data = simulate_trial(config, trial_seed);
      const long k = adaptive ? adaptive_k_for_trial(config, data) : fixed_k;

      TrialOutcome outcome;
      outcome.k_used = k;
      outcome.q_hats.reserve(config.methods.size());
      outcome.covered.reserve(config.methods.size());
      for (Method method : config.methods) {
        conformal::ConformalPredictor predictor =
            method == Method::split
                ? conformal::split_cp(data.train, data.calib, config.alpha, fitter)
                : conformal::ksplit_cp(data.train, data.calib, config.alpha,
                                       static_cast<std::size_t>(k),
                                       method == Method::ksplit_corrected, fitter);
        const double score = std::abs(data.test_response - predictor.model(data.test_covariate));
        outcome.q_hats.push_back(predictor.q_hat);
        outcome.covered.push_back(score <= predictor.q_hat ? 1 : 0);
      }
      outcomes[static_cast<std::size_t>(trial)] = std::move(outcome);
    }
  };

  unsigned worker_count = threads == 0 ? std::thread::hardware_concurrency() : threads;
  worker_count = std::max(1u, std::min<unsigned>(worker_count, static_cast<unsigned>(config.trials)));
  if (worker_count == 1) {
    run_range(0, config.trials);
  } else {
    std::vector<std::future<void>> futures;
    const long chunk = (config.trials + worker_count - 1) / worker_count;
    for (unsigned w = 0; w < worker_count; ++w) {
      const long begin = static_cast<long>(w) * chunk;
      const long end = std::min<long>(begin + chunk, config.trials);
      if (begin >= end) break;
      futures.push_back(std::async(std::launch::async, run_range, begin, end));
    }
    for (auto& f : futures) f.get();  // rethrows worker errors
  }

  // Aggregation reads the per-trial table in index order, so the report is
  // independent of how trials were scheduled.
  CoverageReport report;
  report.q_alpha = q_alpha;
  std::vector<long> ks(outcomes.size());
  for (std::size_t i = 0; i < outcomes.size(); ++i) ks[i] = outcomes[i].k_used;

  for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
    MethodReport method_report;
    method_report.trials = config.trials;
    method_report.q_hats.resize(outcomes.size());
    method_report.covered.resize(outcomes.size());

    double covered_sum = 0.0;
    double halfwidth_sum = 0.0;
    long finite_count = 0;
    std::vector<double> rel_errors;
    rel_errors.reserve(outcomes.size());
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      const double q = outcomes[i].q_hats[mi];
      method_report.q_hats[i] = q;
      method_report.covered[i] = outcomes[i].covered[mi];
      covered_sum += outcomes[i].covered[mi];
      if (std::isfinite(q)) {
        ++finite_count;
        halfwidth_sum += q;
        if (q_alpha > 0.0) rel_errors.push_back(std::abs(q - q_alpha) / q_alpha);
      }
    }

    const double trials_d = static_cast<double>(config.trials);
    method_report.coverage_mean = covered_sum / trials_d;
    method_report.coverage_se = std::sqrt(
        method_report.coverage_mean * (1.0 - method_report.coverage_mean) / trials_d);
    method_report.mean_halfwidth =
        finite_count > 0 ? halfwidth_sum / static_cast<double>(finite_count)
                         : std::numeric_limits<double>::quiet_NaN();
    method_report.relative_length_error =
        q_alpha > 0.0 ? median(std::move(rel_errors)) : 0.0;
    method_report.infinite_intervals = config.trials - finite_count;
    method_report.k_used = config.methods[mi] == Method::split ? 1 : median_long(ks);

    report.methods.emplace_back(config.methods[mi], std::move(method_report));
  }
  return report;
}

RollingSummary run_rolling_experiment(const std::vector<double>& series, std::size_t train_len,
                                      std::size_t calib_len, double alpha, const KPolicy& policy,
                                      const std::vector<Method>& methods, std::size_t max_lag) {
  if (methods.empty()) throw InvalidParameter("run_rolling_experiment: no methods requested");

  const std::vector<double> rets = estimation::returns(series);
  std::vector<double> scores(rets.size());
  for (std::size_t i = 0; i < rets.size(); ++i) scores[i] = std::abs(rets[i]);

  RollingSummary summary;
  long k = 1;
  const bool needs_thinning =
      std::any_of(methods.begin(), methods.end(), [](Method m) { return m != Method::split; });
  if (needs_thinning) {
    if (const auto* fixed = std::get_if<FixedK>(&policy)) {
      k = fixed->k;
      if (k < 1) throw InvalidParameter("run_rolling_experiment: fixed K must be positive");
    } else {
      const std::size_t quarter = rets.size() / 5;
      const std::size_t usable_lag =
          std::min(max_lag, std::clamp<std::size_t>(quarter > 0 ? quarter - 1 : 2, 2, 10000));
      summary.rho_hat = estimation::estimate_rho_autocorr(rets, usable_lag);
      k = std::holds_alternative<KStarPolicy>(policy)
              ? theory::k_star(static_cast<long>(calib_len), summary.rho_hat).rounded
              : estimation::adaptive_k(static_cast<long>(calib_len), summary.rho_hat);
    }
  }

  for (Method method : methods) {
    const std::size_t method_k = method == Method::split ? 1 : static_cast<std::size_t>(k);
    const conformal::RollingResult rolled = conformal::rolling_cp(
        scores, train_len, calib_len, alpha, method_k, method == Method::ksplit_corrected);
    RollingMethodSummary ms;
    ms.method = method;
    ms.k_used = static_cast<long>(method_k);
    ms.coverage_mean = rolled.coverage_mean();
    ms.infinite_intervals = static_cast<long>(rolled.infinite_count);
    ms.covered = rolled.covered;
    ms.q_hats = rolled.q_hats;
    summary.window_count = rolled.covered.size();
    summary.start_index = rolled.start_index;
    summary.methods.push_back(std::move(ms));
  }
  return summary;
}

}  // namespace markovcp::harness
