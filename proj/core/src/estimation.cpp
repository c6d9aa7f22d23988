#include "markovcp/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "markovcp/errors.hpp"

namespace markovcp::estimation {

namespace {

constexpr double kRhoClip = 1e-9;
constexpr double kAutocorrGuard = 0.01;

double clip_rate(double rho) { return std::clamp(rho, kRhoClip, 1.0 - kRhoClip); }

}  // namespace

EmpiricalKernel empirical_kernel(const std::vector<std::size_t>& states, std::size_t num_states) {
  if (num_states == 0) throw InvalidParameter("empirical_kernel: num_states must be positive");
  if (states.size() < 2) throw InvalidParameter("empirical_kernel: need at least two states");
  for (std::size_t s : states)
    if (s >= num_states)
      throw InvalidParameter("empirical_kernel: state index " + std::to_string(s) +
                             " out of range");

  std::vector<long> counts(num_states * num_states, 0);
  std::vector<long> visits(num_states, 0);
  for (std::size_t t = 0; t + 1 < states.size(); ++t) {
    ++counts[states[t] * num_states + states[t + 1]];
    ++visits[states[t]];
  }
  for (std::size_t i = 0; i < num_states; ++i)
    if (visits[i] == 0)
      throw InsufficientData("empirical_kernel: state " + std::to_string(i) + " never visited");

  Matrix p_hat(num_states, num_states);
  for (std::size_t i = 0; i < num_states; ++i) {
    double sum = 0.0;
    std::size_t largest = 0;
    for (std::size_t j = 0; j < num_states; ++j) {
      p_hat(i, j) = static_cast<double>(counts[i * num_states + j]) /
                    static_cast<double>(visits[i]);
      sum += p_hat(i, j);
      if (p_hat(i, j) > p_hat(i, largest)) largest = j;
    }
    // Fold the division roundoff into the largest entry so rows sum to
    // exactly 1.
    p_hat(i, largest) += 1.0 - sum;
  }

  const double total = static_cast<double>(states.size() - 1);
  std::vector<double> freq(num_states);
  double freq_sum = 0.0;
  std::size_t largest = 0;
  for (std::size_t i = 0; i < num_states; ++i) {
    freq[i] = static_cast<double>(visits[i]) / total;
    freq_sum += freq[i];
    if (freq[i] > freq[largest]) largest = i;
  }
  freq[largest] += 1.0 - freq_sum;

  return EmpiricalKernel{num_states, std::move(counts), std::move(p_hat),
                         chains::Distribution(std::move(freq)), std::move(visits)};
}

double estimate_rho(const EmpiricalKernel& kernel) {
  const std::size_t n = kernel.size;
  if (n == 0 || kernel.p_hat.rows() != n || kernel.pi_hat.size() != n)
    throw InvalidParameter("estimate_rho: malformed empirical kernel");
  for (std::size_t i = 0; i < n; ++i)
    if (!(kernel.pi_hat[i] > 0.0))
      throw InsufficientData("estimate_rho: empirical frequency of state " + std::to_string(i) +
                             " is zero");

  Matrix sym(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      sym(i, j) = std::sqrt(kernel.pi_hat[i] / kernel.pi_hat[j]) * kernel.p_hat(i, j);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double avg = 0.5 * (sym(i, j) + sym(j, i));
      sym(i, j) = avg;
      sym(j, i) = avg;
    }

  const std::vector<double> eigenvalues = jacobi_eigenvalues(std::move(sym));
  const double lambda2 = n > 1 ? eigenvalues[1] : eigenvalues[0];
  const double lambda_min = eigenvalues.back();
  return clip_rate(std::max(lambda2, std::abs(lambda_min)));
}

long adaptive_k(long n, double rho_hat) {
  if (n < 2) throw InvalidParameter("adaptive_k: n must be at least 2");
  if (!(rho_hat > 0.0 && rho_hat < 1.0)) throw DomainError("adaptive_k: rho_hat must be in (0, 1)");
  const double k = std::log(static_cast<double>(n)) / std::log(1.0 / rho_hat);
  return std::max<long>(1, std::llround(k));
}

std::vector<double> returns(const std::vector<double>& series) {
  if (series.size() < 2) throw InvalidParameter("returns: need at least two values");
  std::vector<double> out(series.size() - 1);
  for (std::size_t t = 0; t + 1 < series.size(); ++t) {
    if (!(series[t] > 0.0) || !(series[t + 1] > 0.0))
      throw InvalidData("returns: series must be strictly positive (index " + std::to_string(t) +
                        ")");
    out[t] = series[t + 1] / series[t] - 1.0;
  }
  return out;
}

std::vector<double> autocorrelations(const std::vector<double>& series, std::size_t max_lag) {
  if (max_lag < 1) throw InvalidParameter("autocorrelations: max_lag must be positive");
  if (series.size() <= max_lag)
    throw InvalidParameter("autocorrelations: series shorter than max_lag");

  const std::size_t n = series.size();
  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= static_cast<double>(n);

  double denom = 0.0;
  for (double v : series) denom += (v - mean) * (v - mean);
  if (!(denom > 0.0)) throw InsufficientData("autocorrelations: series is constant");

  std::vector<double> acf(max_lag);
  for (std::size_t h = 1; h <= max_lag; ++h) {
    double acc = 0.0;
    for (std::size_t t = 0; t + h < n; ++t) acc += (series[t] - mean) * (series[t + h] - mean);
    acf[h - 1] = acc / denom;
  }
  return acf;
}

double rho_from_autocorr(const std::vector<double>& acf) {
  std::vector<double> lags, logs;
  for (std::size_t h = 0; h < acf.size(); ++h) {
    if (acf[h] > kAutocorrGuard) {
      lags.push_back(static_cast<double>(h + 1));
      logs.push_back(std::log(acf[h]));
    }
  }
  if (lags.size() < 2)
    throw InsufficientData("rho_from_autocorr: fewer than two lags above the positivity guard");

  double lag_mean = 0.0, log_mean = 0.0;
  for (std::size_t i = 0; i < lags.size(); ++i) {
    lag_mean += lags[i];
    log_mean += logs[i];
  }
  lag_mean /= static_cast<double>(lags.size());
  log_mean /= static_cast<double>(lags.size());

  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lags.size(); ++i) {
    sxx += (lags[i] - lag_mean) * (lags[i] - lag_mean);
    sxy += (lags[i] - lag_mean) * (logs[i] - log_mean);
  }
  return clip_rate(std::exp(sxy / sxx));
}

double estimate_rho_autocorr(const std::vector<double>& series, std::size_t max_lag) {
  if (max_lag < 2) throw InvalidParameter("estimate_rho_autocorr: max_lag must be at least 2");
  if (series.size() <= 4 * max_lag)
    throw InvalidParameter("estimate_rho_autocorr: series length must exceed 4 * max_lag");
  return rho_from_autocorr(autocorrelations(series, max_lag));
}

}  // namespace markovcp::estimation
