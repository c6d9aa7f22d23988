#pragma once

#include <functional>
#include <optional>

namespace markovcp::theory {

// Parameter bundle feeding the coverage-gap and quantile-deviation
// calculators. Total-variation and beta terms are unobservable in general;
// callers supply surrogates (analytic bounds, estimates, or zero).
struct BoundInputs {
  long n = 0;           // calibration size
  long train_size = 0;  // training size N
  long r = 0;           // separation gap between training and calibration
  long K = 1;           // thinning step
  double alpha = 0.1;   // miscoverage level
  double t_mix = 1.0;   // mixing time, in steps
  double rho = 0.5;     // geometric-ergodicity rate, in (0, 1)

  // a -> ||nu1 P^a - pi||_TV for the restarted chain; empty means zero.
  std::function<double(long)> delta1;
  double delta_train = 0.0;    // ||nu0 P^N - pi||_TV
  double delta_horizon = 0.0;  // ||nu0 P^{n+N+1} - pi||_TV
  double beta_r = 0.0;         // beta(r)
  double beta_k = 0.0;         // beta(K), or the beta' surrogate off-stationarity

  double delta1_at(long a) const { return delta1 ? delta1(a) : 0.0; }
  double delta1_mean(long upto) const;          // (1/upto) * sum_{a=1..upto} delta1(a)
  double delta1_thinned_mean(long step) const;  // (step/n) * sum_{a=1..floor(n/step)} delta1(step*a)
};

struct GapBound {
  double value;  // coverage-gap upper bound
  double arg_u;  // optimizing u, where applicable
  long arg_r;    // optimizing r, where applicable
};

// Principal branch W0 of the Lambert function on [-1/e, inf).
// Residual |w e^w - x| <= 1e-12 * max(1, |x|).
double lambert_w0(double x);

// Secondary branch W-1 on [-1/e, 0), with values in (-inf, -1].
double lambert_wm1(double x);

// Coverage-gap bound for split CP when the calibration chain restarts
// independently of training: u + exp(-(2n / (9 t_mix)) (u - mean delta1)^2)
// + delta1(n+1), valid for u > mean delta1.
double gamma_restart(double u, const BoundInputs& inputs);

// Coverage-gap bound without restart, with an r-step separation:
// u + exp(-(2(n-r) / (9 t_mix)) (u - delta(N))^2) + delta(n+N+1)
// + 2 beta(r) + (1 + alpha r)/(n + 1), valid for u > delta(N), 1 <= r <= n.
double gamma_norestart(double u, long r, const BoundInputs& inputs);

// The u-optimized no-restart bound via the Lambert W-1 branch. Requires
// n - r >= e * n0 with n0 = (9/4) t_mix; below that there is no interior
// optimum and the bound is vacuous. The appendix expression carries a
// beta(n+1) term that the main-text bound folds differently; it is taken
// here as a caller-supplied surrogate (default 0).
GapBound gamma_optimal_r(const BoundInputs& inputs, double beta_n_plus_1 = 0.0);

struct KStar {
  long rounded;  // max(1, round(exact))
  double exact;  // W0(n^2 ln(rho)^2) / ln(1/rho)
};

// Thinning step that balances coverage gap against quantile inflation.
KStar k_star(long n, double rho);

enum class SplitMode { restart, no_restart };

struct GapInterval {
  double low;   // gamma(K) (or gamma(K, r))
  double high;  // low + K/n (restart) or low + K/(n-r)
};

// Coverage-gap interval of K-split CP. `stationary` records whether beta_k
// holds the stationary beta(K) or the beta' surrogate; the arithmetic is the
// same either way. In restart mode r is ignored.
GapInterval ksplit_gap(long n, long K, long r, const BoundInputs& inputs, bool stationary,
                       SplitMode mode);

struct QuantileBound {
  double u_star;     // the bound in score units times kappa
  double deviation;  // u_star / kappa, the quantile-deviation bound itself
};

// High-probability bound on |q_hat_{alpha,n} - q_hat_alpha|, holding with
// probability at least 1 - delta_conf - d_n. kappa lower-bounds the score
// density near the quantile; c_n/d_n quantify model stability.
QuantileBound quantile_deviation_bound(const BoundInputs& inputs, double kappa, double c_n,
                                       double d_n, double delta_conf, SplitMode mode);

// The same bound for K-split CP: n -> n/K, t_mix -> ceil(t_mix/K), the
// delta1 average thinned by K, and rho -> rho^K.
QuantileBound ksplit_quantile_bound(const BoundInputs& inputs, double kappa, double c_n,
                                    double d_n, double delta_conf, SplitMode mode);

struct CoverageBounds {
  double low;
  double high;
};

// Exact coverage sandwich of split CP with m exchangeable calibration
// scores: [ceil((m+1)(1-alpha))/(m+1), 1 - alpha + 1/(m+1)].
CoverageBounds iid_coverage_bounds(long m, double alpha);

// Rate bound from the mixing time: 1 - gap for reversible chains (the
// absolute spectral gap must be supplied), sqrt(1 - 1/(2 t_mix)) otherwise.
double rho_from_tmix(double t_mix, bool reversible, std::optional<double> gap = std::nullopt);

}  // namespace markovcp::theory
