// Command-line front end: chain simulation, coverage experiments, rolling
// evaluation, rate estimation, and the closed-form bound calculators.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "markovcp/chains.hpp"
#include "markovcp/errors.hpp"
#include "markovcp/estimation.hpp"
#include "markovcp/harness.hpp"
#include "markovcp/io.hpp"
#include "markovcp/rng.hpp"
#include "markovcp/theory.hpp"

namespace {

using nlohmann::ordered_json;

void print_json(const ordered_json& value) { std::cout << value.dump(2) << "\n"; }

markovcp::harness::KPolicy parse_k_policy(const std::string& text) {
  if (text == "kstar") return markovcp::harness::KStarPolicy{};
  if (text == "adaptive") return markovcp::harness::AdaptivePolicy{};
  if (text.rfind("fixed:", 0) == 0) {
    try {
      return markovcp::harness::FixedK{std::stol(text.substr(6))};
    } catch (const std::exception&) {
      throw markovcp::InvalidParameter("cannot parse fixed K from '" + text + "'");
    }
  }
  throw markovcp::InvalidParameter("unknown K policy '" + text +
                                   "' (expected fixed:<int>, kstar, or adaptive)");
}

// Numeric flags shared by the bound subcommands.
struct BoundFlags {
  long n = 1000;
  long train_size = 10000;
  long r = 1;
  long K = 1;
  double alpha = 0.1;
  double t_mix = 1.0;
  double rho = 0.5;
  double u = 0.1;
  double delta1_const = 0.0;
  double delta_train = 0.0;
  double delta_horizon = 0.0;
  double beta_r = 0.0;
  double beta_k = 0.0;
  double beta_n1 = 0.0;
  double kappa = 1.0;
  double c_n = 0.0;
  double d_n = 0.0;
  double delta_conf = 0.05;
  long m = 100;
  std::string mode = "norestart";
  bool stationary = false;

  markovcp::theory::BoundInputs inputs() const {
    markovcp::theory::BoundInputs b;
    b.n = n;
    b.train_size = train_size;
    b.r = r;
    b.K = K;
    b.alpha = alpha;
    b.t_mix = t_mix;
    b.rho = rho;
    if (delta1_const != 0.0) {
      const double c = delta1_const;
      b.delta1 = [c](long) { return c; };
    }
    b.delta_train = delta_train;
    b.delta_horizon = delta_horizon;
    b.beta_r = beta_r;
    b.beta_k = beta_k;
    return b;
  }

  markovcp::theory::SplitMode split_mode() const {
    if (mode == "restart") return markovcp::theory::SplitMode::restart;
    if (mode == "norestart") return markovcp::theory::SplitMode::no_restart;
    throw markovcp::InvalidParameter("unknown mode '" + mode + "' (expected restart|norestart)");
  }
};

int run(int argc, char** argv) {
  CLI::App app{"Split and K-split conformal prediction for Markovian data"};
  app.require_subcommand(1);

  // ---- simulate ----------------------------------------------------------
  auto* simulate = app.add_subcommand("simulate", "Simulate a chain and write a t,value CSV");
  std::string sim_chain = "lazy-walk";
  std::size_t sim_w = 20;
  double sim_theta = 0.9, sim_omega = 1.0;
  std::size_t sim_len = 1000;
  std::uint64_t sim_seed = 0;
  std::string sim_out = "series.csv";
  simulate->add_option("--chain", sim_chain, "Chain family: lazy-walk or ar1")
      ->check(CLI::IsMember({"lazy-walk", "ar1"}));
  simulate->add_option("--w", sim_w, "Lazy-walk cycle length (>= 3)");
  simulate->add_option("--theta", sim_theta, "AR(1) coefficient in [0, 1)");
  simulate->add_option("--omega", sim_omega, "AR(1) noise standard deviation");
  simulate->add_option("--len", sim_len, "Number of steps to simulate");
  simulate->add_option("--seed", sim_seed, "Random seed");
  simulate->add_option("--out", sim_out, "Output CSV path");
  simulate->callback([&] {
    markovcp::io::SeriesFile series;
    series.rows.reserve(sim_len);
    if (sim_chain == "lazy-walk") {
      const auto kernel = markovcp::chains::lazy_walk_kernel(sim_w);
      const auto start = markovcp::chains::Distribution::uniform(sim_w);
      const auto states = markovcp::chains::simulate_finite(kernel, start, sim_len, sim_seed);
      for (std::size_t t = 0; t < states.size(); ++t)
        series.rows.push_back(markovcp::io::SeriesRow{std::to_string(t), static_cast<double>(states[t])});
    } else {
      const markovcp::chains::Ar1Spec spec(sim_theta, sim_omega);
      // Stationary start, drawn from a sub-stream of the seed.
      markovcp::GaussianSampler start(markovcp::stream_seed(sim_seed, 1));
      const double x0 = start.next(0.0, sim_omega / std::sqrt(1.0 - sim_theta * sim_theta));
      const auto xs =
          markovcp::chains::simulate_ar1(spec, x0, sim_len, markovcp::stream_seed(sim_seed, 0));
      for (std::size_t t = 0; t < xs.size(); ++t)
        series.rows.push_back(markovcp::io::SeriesRow{std::to_string(t), xs[t]});
    }
    markovcp::io::write_series_csv(series, sim_out);
    std::cout << "wrote " << series.rows.size() << " rows to " << sim_out << "\n";
  });

  // ---- experiment --------------------------------------------------------
  auto* experiment = app.add_subcommand("experiment", "Run a Monte Carlo coverage experiment");
  std::string exp_config, exp_out = "report.json", exp_format = "json";
  unsigned exp_threads = 0;
  std::vector<long> exp_sweep;
  experiment->add_option("--config", exp_config, "Experiment config JSON file")->required();
  experiment->add_option("--out", exp_out, "Output report path");
  experiment->add_option("--format", exp_format, "Report format: json or csv");
  experiment->add_option("--threads", exp_threads, "Worker threads (0 = hardware)");
  experiment
      ->add_option("--sweep-n", exp_sweep,
                   "Calibration sizes to sweep; writes long-format plot data instead of a report")
      ->delimiter(',');
  experiment->callback([&] {
    auto config = markovcp::io::load_experiment_config(exp_config);
    if (exp_sweep.empty()) {
      const auto format = markovcp::io::report_format_from_string(exp_format);
      const auto report = markovcp::harness::run_coverage_experiment(config, exp_threads);
      markovcp::io::write_report(report, exp_out, format);
      std::cout << markovcp::io::report_to_csv(report);
      return;
    }
    std::vector<markovcp::io::PlotRow> rows;
    for (long n : exp_sweep) {
      config.calib_size = n;
      const auto report = markovcp::harness::run_coverage_experiment(config, exp_threads);
      for (const auto& [method, r] : report.methods) {
        const std::string name = markovcp::harness::to_string(method);
        const double x = static_cast<double>(n);
        rows.push_back(markovcp::io::PlotRow{x, name, "coverage_mean", r.coverage_mean});
        rows.push_back(markovcp::io::PlotRow{x, name, "mean_halfwidth", r.mean_halfwidth});
        rows.push_back(
            markovcp::io::PlotRow{x, name, "relative_length_error", r.relative_length_error});
        rows.push_back(markovcp::io::PlotRow{x, name, "k_used", static_cast<double>(r.k_used)});
      }
    }
    markovcp::io::emit_plot_data(std::move(rows), exp_out);
    std::cout << "wrote sweep over " << exp_sweep.size() << " calibration sizes to " << exp_out
              << "\n";
  });

  // ---- rolling -----------------------------------------------------------
  auto* rolling = app.add_subcommand("rolling", "Rolling-window coverage on a series CSV");
  std::string roll_series, roll_method = "split", roll_k = "fixed:1", roll_out = "rolling.csv";
  std::size_t roll_train = 0, roll_cal = 0;
  double roll_alpha = 0.1;
  rolling->add_option("--series", roll_series, "Input t,value CSV of a positive series")
      ->required();
  rolling->add_option("--train", roll_train, "Training window length")->required();
  rolling->add_option("--cal", roll_cal, "Calibration window length")->required();
  rolling->add_option("--alpha", roll_alpha, "Miscoverage level");
  rolling->add_option("--method", roll_method, "split, ksplit, or ksplit_corrected")
      ->check(CLI::IsMember({"split", "ksplit", "ksplit_corrected", "all"}));
  rolling->add_option("--k", roll_k, "K policy: fixed:<int>, kstar, or adaptive");
  rolling->add_option("--out", roll_out, "Output long-format CSV (x,method,metric,value)");
  rolling->callback([&] {
    const auto series = markovcp::io::load_series_csv(roll_series);
    std::vector<markovcp::harness::Method> methods;
    if (roll_method == "all") {
      methods = {markovcp::harness::Method::split, markovcp::harness::Method::ksplit,
                 markovcp::harness::Method::ksplit_corrected};
    } else {
      methods = {*markovcp::harness::method_from_string(roll_method)};
    }
    const auto summary = markovcp::harness::run_rolling_experiment(
        series.values(), roll_train, roll_cal, roll_alpha, parse_k_policy(roll_k), methods);

    std::vector<markovcp::io::PlotRow> plot_rows;
    ordered_json out_summary;
    for (const auto& ms : summary.methods) {
      const std::string name = markovcp::harness::to_string(ms.method);
      for (std::size_t i = 0; i < ms.covered.size(); ++i) {
        const double t = static_cast<double>(summary.start_index + i);
        plot_rows.push_back(markovcp::io::PlotRow{t, name, "covered", static_cast<double>(ms.covered[i])});
        plot_rows.push_back(markovcp::io::PlotRow{t, name, "q_hat", ms.q_hats[i]});
      }
      ordered_json entry;
      entry["coverage_mean"] = ms.coverage_mean;
      entry["k_used"] = ms.k_used;
      entry["infinite_intervals"] = ms.infinite_intervals;
      entry["windows"] = static_cast<long>(summary.window_count);
      out_summary[name] = entry;
    }
    if (summary.rho_hat > 0.0) out_summary["rho_hat"] = summary.rho_hat;
    markovcp::io::emit_plot_data(std::move(plot_rows), roll_out);
    print_json(out_summary);
  });

  // ---- estimate-gap ------------------------------------------------------
  auto* estimate_gap =
      app.add_subcommand("estimate-gap", "Spectral rate estimate from a state trajectory CSV");
  std::string gap_traj;
  std::size_t gap_states = 0;
  long gap_n = 0;
  estimate_gap->add_option("--traj", gap_traj, "Input t,value CSV of integer states")->required();
  estimate_gap->add_option("--states", gap_states, "Number of states")->required();
  estimate_gap->add_option("--n", gap_n, "Optional calibration size for the adaptive K");
  estimate_gap->callback([&] {
    const auto series = markovcp::io::load_series_csv(gap_traj);
    std::vector<std::size_t> states;
    states.reserve(series.rows.size());
    for (const auto& row : series.rows) {
      if (row.value < 0.0 || row.value != std::floor(row.value))
        throw markovcp::InvalidData("trajectory values must be nonnegative integers");
      states.push_back(static_cast<std::size_t>(row.value));
    }
    const auto kernel = markovcp::estimation::empirical_kernel(states, gap_states);
    const double rho_hat = markovcp::estimation::estimate_rho(kernel);
    ordered_json out;
    out["rho_hat"] = rho_hat;
    out["gap_hat"] = 1.0 - rho_hat;
    if (gap_n >= 2) out["k_hat"] = markovcp::estimation::adaptive_k(gap_n, rho_hat);
    print_json(out);
  });

  // ---- estimate-rho ------------------------------------------------------
  auto* estimate_rho =
      app.add_subcommand("estimate-rho", "Autocorrelation-decay rate estimate from a series CSV");
  std::string rho_series;
  std::size_t rho_max_lag = 20;
  estimate_rho->add_option("--series", rho_series, "Input t,value CSV")->required();
  estimate_rho->add_option("--max-lag", rho_max_lag, "Largest lag used in the regression");
  estimate_rho->callback([&] {
    const auto series = markovcp::io::load_series_csv(rho_series);
    const double rho_hat =
        markovcp::estimation::estimate_rho_autocorr(series.values(), rho_max_lag);
    ordered_json out;
    out["rho_hat"] = rho_hat;
    print_json(out);
  });

  // ---- kstar (also available as `bounds kstar`) ---------------------------
  long kstar_n = 1000;
  double kstar_rho = 0.9;
  auto kstar_handler = [&] {
    const auto result = markovcp::theory::k_star(kstar_n, kstar_rho);
    ordered_json out;
    out["k_star"] = result.rounded;
    out["k_star_exact"] = result.exact;
    print_json(out);
  };
  auto* kstar_cmd = app.add_subcommand("kstar", "Coverage/length-balancing thinning step");
  kstar_cmd->add_option("--n", kstar_n, "Calibration size")->required();
  kstar_cmd->add_option("--rho", kstar_rho, "Chain rate in (0, 1)")->required();
  kstar_cmd->callback(kstar_handler);

  // ---- bounds ------------------------------------------------------------
  auto* bounds = app.add_subcommand("bounds", "Closed-form coverage-gap and quantile bounds");
  bounds->require_subcommand(1);
  auto flags = std::make_shared<BoundFlags>();
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--n", flags->n, "Calibration size");
    cmd->add_option("--N", flags->train_size, "Training size");
    cmd->add_option("--r", flags->r, "Separation gap");
    cmd->add_option("--K", flags->K, "Thinning step");
    cmd->add_option("--alpha", flags->alpha, "Miscoverage level");
    cmd->add_option("--tmix", flags->t_mix, "Mixing time");
    cmd->add_option("--rho", flags->rho, "Chain rate");
    cmd->add_option("--delta1-const", flags->delta1_const,
                    "Constant surrogate for the restart TV sequence delta1(a)");
    cmd->add_option("--delta-train", flags->delta_train, "TV surrogate delta(N)");
    cmd->add_option("--delta-horizon", flags->delta_horizon, "TV surrogate delta(n+N+1)");
    cmd->add_option("--beta-r", flags->beta_r, "beta(r) surrogate");
    cmd->add_option("--beta-k", flags->beta_k, "beta(K) surrogate");
    cmd->add_option("--mode", flags->mode, "restart or norestart");
    return cmd;
  };

  auto* gamma_restart_cmd =
      add_common(bounds->add_subcommand("gamma-restart", "Coverage-gap bound with restart"));
  gamma_restart_cmd->add_option("--u", flags->u, "Quantile-shift parameter u");
  gamma_restart_cmd->callback([flags] {
    ordered_json out;
    out["value"] = markovcp::theory::gamma_restart(flags->u, flags->inputs());
    print_json(out);
  });

  auto* gamma_cmd =
      add_common(bounds->add_subcommand("gamma", "Coverage-gap bound without restart"));
  gamma_cmd->add_option("--u", flags->u, "Quantile-shift parameter u");
  gamma_cmd->callback([flags] {
    ordered_json out;
    out["value"] = markovcp::theory::gamma_norestart(flags->u, flags->r, flags->inputs());
    print_json(out);
  });

  auto* gamma_opt_cmd =
      add_common(bounds->add_subcommand("gamma-opt", "u-optimized no-restart bound"));
  gamma_opt_cmd->add_option("--beta-n1", flags->beta_n1, "beta(n+1) surrogate");
  gamma_opt_cmd->callback([flags] {
    const auto bound = markovcp::theory::gamma_optimal_r(flags->inputs(), flags->beta_n1);
    ordered_json out;
    out["value"] = bound.value;
    out["arg_u"] = bound.arg_u;
    out["arg_r"] = bound.arg_r;
    print_json(out);
  });

  auto* bounds_kstar = bounds->add_subcommand("kstar", "Optimal thinning step");
  bounds_kstar->add_option("--n", kstar_n, "Calibration size")->required();
  bounds_kstar->add_option("--rho", kstar_rho, "Chain rate in (0, 1)")->required();
  bounds_kstar->callback(kstar_handler);

  auto* ksplit_gap_cmd =
      add_common(bounds->add_subcommand("ksplit-gap", "K-split coverage-gap interval"));
  ksplit_gap_cmd->add_flag("--stationary", flags->stationary,
                           "beta-k holds the stationary beta(K)");
  ksplit_gap_cmd->callback([flags] {
    const auto interval =
        markovcp::theory::ksplit_gap(flags->n, flags->K, flags->r, flags->inputs(),
                                     flags->stationary, flags->split_mode());
    ordered_json out;
    out["low"] = interval.low;
    out["high"] = interval.high;
    print_json(out);
  });

  auto* quantile_cmd = add_common(
      bounds->add_subcommand("quantile-dev", "Quantile-deviation bound (K > 1 thins)"));
  quantile_cmd->add_option("--kappa", flags->kappa, "Density lower bound near the quantile");
  quantile_cmd->add_option("--cn", flags->c_n, "Model stability c_N");
  quantile_cmd->add_option("--dn", flags->d_n, "Model stability d_N");
  quantile_cmd->add_option("--delta-conf", flags->delta_conf, "Confidence level delta");
  quantile_cmd->callback([flags] {
    const auto bound =
        flags->K > 1
            ? markovcp::theory::ksplit_quantile_bound(flags->inputs(), flags->kappa, flags->c_n,
                                                      flags->d_n, flags->delta_conf,
                                                      flags->split_mode())
            : markovcp::theory::quantile_deviation_bound(flags->inputs(), flags->kappa,
                                                         flags->c_n, flags->d_n,
                                                         flags->delta_conf, flags->split_mode());
    ordered_json out;
    out["u_star"] = bound.u_star;
    out["deviation"] = bound.deviation;
    print_json(out);
  });

  auto* iid_cmd = bounds->add_subcommand("iid", "Exchangeable coverage sandwich");
  iid_cmd->add_option("--m", flags->m, "Calibration size");
  iid_cmd->add_option("--alpha", flags->alpha, "Miscoverage level");
  iid_cmd->callback([flags] {
    const auto cb = markovcp::theory::iid_coverage_bounds(flags->m, flags->alpha);
    ordered_json out;
    out["low"] = cb.low;
    out["high"] = cb.high;
    print_json(out);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const markovcp::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
}
