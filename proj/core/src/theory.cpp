#include "markovcp/theory.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "markovcp/errors.hpp"

namespace markovcp::theory {

namespace {

constexpr double kResidualTolerance = 1e-13;

double lambert_residual(double w, double x) { return w * std::exp(w) - x; }

// Safeguarded Newton on f(w) = w e^w - x over a sign-changing bracket.
// Newton steps that leave the bracket fall back to bisection, so the
// iteration always converges. f is increasing on [-1, inf) (the W0 branch)
// and decreasing on (-inf, -1] (the W-1 branch); `increasing` selects the
// bracket-update convention.
double lambert_solve(double x, double w, double lo, double hi, bool increasing) {
  for (int iter = 0; iter < 200; ++iter) {
    const double f = lambert_residual(w, x);
    if (std::abs(f) <= kResidualTolerance * std::max(1.0, std::abs(x))) return w;
    if ((f > 0.0) == increasing) {
      hi = std::min(hi, w);
    } else {
      lo = std::max(lo, w);
    }
    const double deriv = std::exp(w) * (1.0 + w);
    double next = (deriv != 0.0 && std::isfinite(deriv)) ? w - f / deriv : w;
    if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
    if (next == w) break;
    w = next;
  }
  return w;
}

// Series around the branch point x = -1/e, where Newton loses quadratic
// convergence. p = sqrt(2(1 + e x)); the upper sign gives W0, the lower W-1.
double branch_point_series(double x, bool principal) {
  const double p2 = std::max(0.0, 2.0 * (1.0 + std::exp(1.0) * x));
  const double p = (principal ? 1.0 : -1.0) * std::sqrt(p2);
  return -1.0 + p - p2 / 3.0 + 11.0 / 72.0 * p2 * p;
}

}  // namespace

double lambert_w0(double x) {
  const double branch = -std::exp(-1.0);
  if (x < branch) {
    if (x > branch - 1e-15) x = branch;  // admit roundoff at the branch point
    else
      throw DomainError("lambert_w0: x below -1/e");
  }
  if (x == 0.0) return 0.0;

  if (x < branch + 1e-5) {
    const double w = branch_point_series(x, /*principal=*/true);
    return lambert_solve(x, std::max(w, -1.0), -1.0, 0.0, /*increasing=*/true);
  }

  double guess, lo, hi;
  if (x < 0.0) {
    guess = x * std::exp(-x * std::exp(1.0) * 0.5);  // crude but inside (-1, 0)
    lo = -1.0;
    hi = 0.0;
  } else if (x <= std::exp(1.0)) {
    guess = std::log1p(x) * 0.7;
    lo = 0.0;
    hi = 1.0 + 1e-12;
    while (lambert_residual(hi, x) < 0.0) hi *= 2.0;
  } else {
    const double l1 = std::log(x);
    const double l2 = std::log(l1);
    guess = l1 - l2 + l2 / l1;
    lo = 1.0;
    hi = l1;  // W0(x) <= ln(x) for x >= e
    while (lambert_residual(hi, x) < 0.0) hi += 1.0;
  }
  guess = std::clamp(guess, lo, hi);
  return lambert_solve(x, guess, lo, hi, /*increasing=*/true);
}

double lambert_wm1(double x) {
  const double branch = -std::exp(-1.0);
  if (x < branch) {
    if (x > branch - 1e-15) x = branch;
    else
      throw DomainError("lambert_wm1: x below -1/e");
  }
  if (!(x < 0.0)) throw DomainError("lambert_wm1: x must be negative");

  if (x < branch + 1e-5) {
    const double w = branch_point_series(x, /*principal=*/false);
    return lambert_solve(x, std::min(w, -1.0), -60.0, -1.0, /*increasing=*/false);
  }

  // Asymptotic start for x -> 0-: W-1(x) ~ ln(-x) - ln(-ln(-x)).
  const double l1 = std::log(-x);
  const double l2 = std::log(-l1);
  double guess = l1 - l2 + l2 / l1;

  // f(w) = w e^w - x is decreasing on (-inf, -1]: positive far left,
  // nonpositive at -1. Expand leftward until the bracket holds.
  const double hi = -1.0;
  double lo = std::min(guess - 1.0, -2.0);
  while (lambert_residual(lo, x) < 0.0) lo -= std::max(1.0, -0.5 * lo);
  guess = std::clamp(guess, lo, hi);
  return lambert_solve(x, guess, lo, hi, /*increasing=*/false);
}

double BoundInputs::delta1_mean(long upto) const {
  if (upto < 1) throw InvalidParameter("delta1_mean: upto must be at least 1");
  if (!delta1) return 0.0;
  double acc = 0.0;
  for (long a = 1; a <= upto; ++a) acc += delta1(a);
  return acc / static_cast<double>(upto);
}

double BoundInputs::delta1_thinned_mean(long step) const {
  if (step < 1) throw InvalidParameter("delta1_thinned_mean: step must be at least 1");
  if (!delta1) return 0.0;
  const long m = n / step;
  double acc = 0.0;
  for (long a = 1; a <= m; ++a) acc += delta1(step * a);
  return acc * static_cast<double>(step) / static_cast<double>(n);
}

double gamma_restart(double u, const BoundInputs& inputs) {
  if (inputs.n < 1) throw InvalidParameter("gamma_restart: n must be positive");
  if (!(inputs.t_mix > 0.0)) throw InvalidParameter("gamma_restart: t_mix must be positive");
  const double mean_delta1 = inputs.delta1_mean(inputs.n);
  if (!(u > mean_delta1))
    throw DomainError("gamma_restart: bound vacuous, u must exceed the average delta1");
  const double rate = 2.0 * static_cast<double>(inputs.n) / (9.0 * inputs.t_mix);
  const double excess = u - mean_delta1;
  return u + std::exp(-rate * excess * excess) + inputs.delta1_at(inputs.n + 1);
}

double gamma_norestart(double u, long r, const BoundInputs& inputs) {
  if (inputs.n < 1) throw InvalidParameter("gamma_norestart: n must be positive");
  if (r < 1 || r > inputs.n) throw InvalidParameter("gamma_norestart: r must be in [1, n]");
  if (!(inputs.t_mix > 0.0)) throw InvalidParameter("gamma_norestart: t_mix must be positive");
  if (!(u > inputs.delta_train))
    throw DomainError("gamma_norestart: bound vacuous, u must exceed delta(N)");
  const double rate = 2.0 * static_cast<double>(inputs.n - r) / (9.0 * inputs.t_mix);
  const double excess = u - inputs.delta_train;
  return u + std::exp(-rate * excess * excess) + inputs.delta_horizon + 2.0 * inputs.beta_r +
         (1.0 + inputs.alpha * static_cast<double>(r)) / static_cast<double>(inputs.n + 1);
}

GapBound gamma_optimal_r(const BoundInputs& inputs, double beta_n_plus_1) {
  const long r = inputs.r;
  if (inputs.n < 1) throw InvalidParameter("gamma_optimal_r: n must be positive");
  if (r < 1 || r > inputs.n) throw InvalidParameter("gamma_optimal_r: r must be in [1, n]");
  if (!(inputs.t_mix > 0.0)) throw InvalidParameter("gamma_optimal_r: t_mix must be positive");

  const double n0 = 2.25 * inputs.t_mix;
  const double effective = static_cast<double>(inputs.n - r);
  if (effective < std::exp(1.0) * n0)
    throw DomainError("gamma_optimal_r: no interior optimum, n - r below e * (9/4) t_mix");

  const double ratio = n0 / effective;  // equals 1/(2A) with A = 2(n-r)/(9 t_mix)
  const double w = lambert_wm1(-ratio);
  const double u_excess = std::sqrt(-w * ratio);
  const double value = u_excess + std::exp(0.5 * w) +
                       (1.0 + inputs.alpha * static_cast<double>(r)) /
                           static_cast<double>(inputs.n + 1) +
                       inputs.delta_train + inputs.delta_horizon + beta_n_plus_1 + inputs.beta_r;
  return GapBound{value, u_excess + inputs.delta_train, r};
}

KStar k_star(long n, double rho) {
  if (n < 2) throw InvalidParameter("k_star: n must be at least 2");
  if (!(rho > 0.0 && rho < 1.0)) throw DomainError("k_star: rho must be in (0, 1)");
  const double log_rho = std::log(rho);
  const double exact =
      lambert_w0(static_cast<double>(n) * static_cast<double>(n) * log_rho * log_rho) /
      std::log(1.0 / rho);
  return KStar{std::max<long>(1, std::llround(exact)), exact};
}

GapInterval ksplit_gap(long n, long K, long r, const BoundInputs& inputs, bool stationary,
                       SplitMode mode) {
  (void)stationary;  // documents which beta the caller packed into beta_k
  if (n < 1) throw InvalidParameter("ksplit_gap: n must be positive");
  if (mode == SplitMode::restart) {
    if (K < 1 || K > n) throw InvalidParameter("ksplit_gap: K must be in [1, n]");
    const double low = 2.0 * (static_cast<double>(n) / static_cast<double>(K)) * inputs.beta_k;
    return GapInterval{low, low + static_cast<double>(K) / static_cast<double>(n)};
  }
  if (r < 1 || r > n) throw InvalidParameter("ksplit_gap: r must be in [1, n]");
  if (K < 1 || K > n - r) throw InvalidParameter("ksplit_gap: K must be in [1, n - r]");
  const double low =
      (1.0 + inputs.alpha * static_cast<double>(r)) / static_cast<double>(n + 1) +
      2.0 * (static_cast<double>(n - r) / static_cast<double>(K)) * inputs.beta_k + inputs.beta_r;
  return GapInterval{low, low + static_cast<double>(K) / static_cast<double>(n - r)};
}

QuantileBound quantile_deviation_bound(const BoundInputs& inputs, double kappa, double c_n,
                                       double d_n, double delta_conf, SplitMode mode) {
  if (!(delta_conf > 0.0 && delta_conf < 1.0))
    throw DomainError("quantile_deviation_bound: confidence delta must be in (0, 1)");
  if (!(kappa > 0.0)) throw InvalidParameter("quantile_deviation_bound: kappa must be positive");
  if (inputs.n < 1) throw InvalidParameter("quantile_deviation_bound: n must be positive");
  if (!(inputs.t_mix > 0.0))
    throw InvalidParameter("quantile_deviation_bound: t_mix must be positive");

  const double n = static_cast<double>(inputs.n);
  const double concentration =
      std::sqrt(9.0 * inputs.t_mix * std::log(2.0 / delta_conf) / (2.0 * n));
  double u_star = d_n + 2.0 * kappa * c_n + concentration;
  if (mode == SplitMode::restart) {
    u_star += inputs.delta1_mean(inputs.n);
  } else {
    if (!(inputs.rho > 0.0 && inputs.rho < 1.0))
      throw DomainError("quantile_deviation_bound: no-restart mode needs rho in (0, 1)");
    u_star += inputs.delta_train + inputs.alpha * std::log(n) / (n * std::log(1.0 / inputs.rho));
  }
  return QuantileBound{u_star, u_star / kappa};
}

QuantileBound ksplit_quantile_bound(const BoundInputs& inputs, double kappa, double c_n,
                                    double d_n, double delta_conf, SplitMode mode) {
  if (!(delta_conf > 0.0 && delta_conf < 1.0))
    throw DomainError("ksplit_quantile_bound: confidence delta must be in (0, 1)");
  if (!(kappa > 0.0)) throw InvalidParameter("ksplit_quantile_bound: kappa must be positive");
  if (inputs.K < 1) throw InvalidParameter("ksplit_quantile_bound: K must be at least 1");
  if (inputs.n < 1) throw InvalidParameter("ksplit_quantile_bound: n must be positive");
  if (!(inputs.t_mix > 0.0))
    throw InvalidParameter("ksplit_quantile_bound: t_mix must be positive");

  // Substitution rules for the thinned chain: n -> n/K, t_mix -> ceil(t_mix/K),
  // the delta1 average taken along multiples of K, rho -> rho^K.
  const double n_eff = static_cast<double>(inputs.n) / static_cast<double>(inputs.K);
  const double t_eff = std::ceil(inputs.t_mix / static_cast<double>(inputs.K));
  const double concentration =
      std::sqrt(9.0 * t_eff * std::log(2.0 / delta_conf) / (2.0 * n_eff));
  double u_star = d_n + 2.0 * kappa * c_n + concentration;
  if (mode == SplitMode::restart) {
    u_star += inputs.delta1_thinned_mean(inputs.K);
  } else {
    if (!(inputs.rho > 0.0 && inputs.rho < 1.0))
      throw DomainError("ksplit_quantile_bound: no-restart mode needs rho in (0, 1)");
    const double rho_eff = std::pow(inputs.rho, static_cast<double>(inputs.K));
    u_star +=
        inputs.delta_train + inputs.alpha * std::log(n_eff) / (n_eff * std::log(1.0 / rho_eff));
  }
  return QuantileBound{u_star, u_star / kappa};
}

CoverageBounds iid_coverage_bounds(long m, double alpha) {
  if (m < 1) throw InvalidParameter("iid_coverage_bounds: m must be positive");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw InvalidParameter("iid_coverage_bounds: alpha must be in (0, 1)");
  const double denom = static_cast<double>(m + 1);
  const double rank = std::ceil(denom * (1.0 - alpha) - 1e-9);
  return CoverageBounds{std::min(1.0, rank / denom), 1.0 - alpha + 1.0 / denom};
}

double rho_from_tmix(double t_mix, bool reversible, std::optional<double> gap) {
  if (!(t_mix >= 1.0)) throw InvalidParameter("rho_from_tmix: t_mix must be at least 1");
  if (reversible) {
    if (!gap || !(*gap > 0.0 && *gap <= 1.0))
      throw InvalidParameter("rho_from_tmix: reversible mode needs the spectral gap in (0, 1]");
    return 1.0 - *gap;
  }
  return std::sqrt(1.0 - 1.0 / (2.0 * t_mix));
}

}  // namespace markovcp::theory
