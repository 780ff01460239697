// Command-line harness for the pricing-learner simulation library.
//
//   pricer run      --config cfg.json [--out DIR] [--seed S] [--workers N]
//                   [--scale F] [--trace] [--check]
//                   [--pac mu=<f>,lambda=<f>,trials=<n>]
//   pricer validate --config cfg.json [--grid-step H]
//   pricer ode      --config cfg.json [--out DIR] [--point I]
//                   [--tau-end T] [--dt H]
//
// Exit codes: 0 success, 1 configuration or runtime error, 2 failed
// verification (--check failures or a family point without an increasing
// hazard rate under `validate`).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pricelearn/demand.hpp"
#include "pricelearn/harness.hpp"
#include "pricelearn/linear_learner.hpp"
#include "pricelearn/ode.hpp"
#include "pricelearn/random.hpp"

namespace pl = pricelearn;
namespace fs = std::filesystem;

namespace {

struct PacArgs {
    double mu = 0.0;
    double lambda = 0.0;
    int trials = 0;
};

// Parses "mu=<f>,lambda=<f>,trials=<n>" (keys in any order).
PacArgs parse_pac_args(const std::string& text) {
    PacArgs out;
    bool got_mu = false, got_lambda = false, got_trials = false;
    std::string rest = text;
    while (!rest.empty()) {
        const auto comma = rest.find(',');
        const std::string item = rest.substr(0, comma);
        rest = comma == std::string::npos ? std::string() : rest.substr(comma + 1);
        const auto eq = item.find('=');
        if (eq == std::string::npos) {
            throw pl::ConfigError("--pac: expected key=value, got '" + item + "'");
        }
        const std::string key = item.substr(0, eq);
        const std::string value = item.substr(eq + 1);
        try {
            if (key == "mu") {
                out.mu = std::stod(value);
                got_mu = true;
            } else if (key == "lambda") {
                out.lambda = std::stod(value);
                got_lambda = true;
            } else if (key == "trials") {
                out.trials = std::stoi(value);
                got_trials = true;
            } else {
                throw pl::ConfigError("--pac: unknown key '" + key + "'");
            }
        } catch (const pl::ConfigError&) {
            throw;
        } catch (const std::exception&) {
            throw pl::ConfigError("--pac: cannot parse value for '" + key + "'");
        }
    }
    if (!got_mu || !got_lambda || !got_trials) {
        throw pl::ConfigError("--pac requires mu=<f>,lambda=<f>,trials=<n>");
    }
    return out;
}

// Clock-time budget for accuracy mu, read off the fitted tau(mu) line of a
// contraction estimate; the safety factor covers starting points beyond the
// probe grid (the box reset point can sit much farther from the optimum).
double tau_budget(const pl::ContractionEstimate& est, double mu, double safety) {
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double n = static_cast<double>(est.tau_of.size());
    for (const auto& [grid_mu, tau] : est.tau_of) {
        const double x = -std::log(grid_mu);
        sx += x;
        sy += tau;
        sxx += x * x;
        sxy += x * tau;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / n;
    const double tau = intercept + slope * (-std::log(mu));
    if (!(tau > 0.0) || !std::isfinite(tau)) {
        throw std::runtime_error("tau(mu) fit produced a non-positive budget");
    }
    return safety * tau;
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            std::optional<std::uint64_t> seed_override, int workers, double scale,
            bool want_trace, bool want_check, const std::string& pac_spec) {
    // Reject malformed arguments before paying for the sweep.
    std::optional<PacArgs> pac;
    if (!pac_spec.empty()) pac = parse_pac_args(pac_spec);

    pl::SweepConfig cfg = pl::load_config(config_path);
    if (seed_override) cfg.seed = *seed_override;
    if (scale != 1.0) {
        if (!(scale > 0.0) || !std::isfinite(scale)) {
            throw pl::ConfigError("--scale must be a positive fraction");
        }
        const auto scaled = static_cast<int>(std::llround(cfg.family.sigma_count * scale));
        if (scaled < 2 && cfg.family.sigma_count > 1 &&
            cfg.family.sigma_lo != cfg.family.sigma_hi) {
            throw pl::ConfigError(
                "--scale collapses the sigma grid to a single point; use a larger fraction");
        }
        cfg.family.sigma_count = std::max(1, scaled);
    }

    const auto result = pl::run_sweep(cfg, workers);
    const auto summary = pl::summarize_sweep(result);
    pl::emit_results(result, summary, out_dir);

    std::printf("sweep: %d point(s) x %d replication(s), horizon %lld, %d buyers\n",
                cfg.family.point_count(), cfg.replications,
                static_cast<long long>(cfg.horizon), cfg.n_buyers);
    std::printf("linear price error: mean %+.6f, variance %.6f (n=%lld, %lld projections)\n",
                summary.linear_price.mean, summary.linear_price.variance,
                static_cast<long long>(summary.linear_price.n),
                static_cast<long long>(summary.projections_total));
    for (const auto& [k, stats] : summary.cr_price) {
        std::printf("baseline K=%d price error: mean %+.6f, variance %.6f, "
                    "mean sup|F_hat - F| %.5f\n",
                    k, stats.mean, stats.variance, summary.cr_sup_mean.at(k));
    }
    std::printf("wrote %s/sweep.csv, summary.json, histograms\n", out_dir.c_str());

    if (want_trace) {
        // Replays the sweep's first linear episode (point 0, replication 0)
        // on the identical stream, recording every period.
        const auto curve = cfg.family.curve_at(0);
        const auto box =
            pl::BeliefBox::for_curve(curve, cfg.linear.q_min, cfg.linear.box_inflate);
        pl::EpisodeConfig ec;
        ec.schedule = pl::GainSchedule::constant(cfg.linear.gain, cfg.linear.gain_ceiling);
        ec.perturbation = cfg.linear.perturbation_spec();
        ec.n_buyers = cfg.n_buyers;
        ec.horizon = cfg.horizon;
        ec.initial_beliefs = cfg.linear.initial_beliefs;
        ec.record_trace = true;
        pl::RandomStream rng = pl::RandomStream::derive(cfg.seed, 0, 0, 0);
        const auto episode = pl::run_episode(curve, ec, box, rng);
        const auto path = (fs::path(out_dir) / "trace_linear.csv").string();
        pl::write_trace_csv(episode.trace, path);
        std::printf("wrote %s (%zu periods)\n", path.c_str(), episode.trace.size());
    }

    if (pac) {
        // Certifies the hardest-looking members of the family: both sigma
        // endpoints plus the midpoint (deduplicated for single-point families).
        std::vector<int> probe_points = {0, cfg.family.point_count() / 2,
                                         cfg.family.point_count() - 1};
        probe_points.erase(std::unique(probe_points.begin(), probe_points.end()),
                           probe_points.end());
        std::optional<pl::PacCertificate> worst;
        double worst_param = 0.0;
        for (int point : probe_points) {
            const auto curve = cfg.family.curve_at(point);
            const auto est = pl::estimate_contraction(
                curve, pl::default_contraction_grid(curve), pl::default_mu_grid());
            const double tau_mu = tau_budget(est, pac->mu, /*safety=*/2.0);
            const auto cert =
                pl::pac_certify(curve, cfg.linear, cfg.n_buyers, pac->mu, pac->lambda,
                                pac->trials, tau_mu, cfg.seed, workers,
                                cfg.linear.initial_beliefs);
            std::printf("pac point %d (param %.3f): T=%lld, failure rate %.4f, "
                        "95%% upper %.4f, %s\n",
                        point, cfg.family.param_at(point),
                        static_cast<long long>(cert.t_used), cert.failure_rate,
                        cert.failure_rate_upper, cert.passed ? "passed" : "FAILED");
            if (!worst || cert.failure_rate_upper > worst->failure_rate_upper) {
                worst = cert;
                worst_param = cfg.family.param_at(point);
            }
        }
        const auto path = (fs::path(out_dir) / "pac.json").string();
        pl::write_pac_json(*worst, path);
        std::printf("wrote %s (worst family member, param %.3f)\n", path.c_str(), worst_param);
    }

    if (want_check) {
        const auto outcomes = pl::evaluate_checks(result, summary);
        int failed = 0;
        for (const auto& oc : outcomes) {
            std::printf("[%s] check %s: %.6f in [%.6f, %.6f]\n", oc.passed ? "PASS" : "FAIL",
                        oc.name.c_str(), oc.value, oc.lo, oc.hi);
            if (!oc.passed) ++failed;
        }
        if (outcomes.empty()) std::printf("no checks configured\n");
        if (failed > 0) {
            std::printf("%d check(s) failed\n", failed);
            return 2;
        }
    }
    return 0;
}

int cmd_validate(const std::string& config_path, double grid_step) {
    const pl::SweepConfig cfg = pl::load_config(config_path);
    const int count = cfg.family.point_count();
    const std::vector<int> detailed = {0, count / 2, count - 1};

    int failures = 0;
    for (int point = 0; point < count; ++point) {
        const auto curve = cfg.family.curve_at(point);
        const auto report = pl::validate_ihr(curve, grid_step);
        if (!report.is_ihr) ++failures;
        const bool detail =
            std::find(detailed.begin(), detailed.end(), point) != detailed.end();
        if (detail || !report.is_ihr) {
            const auto opt = pl::optimal_price(curve);
            std::printf("point %d (param %.3f): hazard %s, density Lipschitz ~%.5f, "
                        "optimal price %.6f (sale probability %.6f)\n",
                        point, cfg.family.param_at(point),
                        report.is_ihr ? "increasing" : "NOT increasing",
                        report.lipschitz_estimate, opt.b_star, opt.q_star);
        }
    }
    std::printf("%d/%d family member(s) have an increasing hazard rate\n", count - failures,
                count);
    return failures == 0 ? 0 : 2;
}

int cmd_ode(const std::string& config_path, const std::string& out_dir, int point,
            double tau_end, double dt) {
    const pl::SweepConfig cfg = pl::load_config(config_path);
    if (point < 0 || point >= cfg.family.point_count()) {
        throw pl::ConfigError("--point out of range for the configured family");
    }
    const auto curve = cfg.family.curve_at(point);
    const auto box = pl::BeliefBox::for_curve(curve, cfg.linear.q_min, cfg.linear.box_inflate);
    const pl::LinearBeliefs start = cfg.linear.initial_beliefs.value_or(box.reset_point());

    const auto trajectory =
        pl::integrate(curve, {start.beta0, start.beta1}, tau_end, dt);
    const auto estimate = pl::estimate_contraction(
        curve, pl::default_contraction_grid(curve), pl::default_mu_grid(), dt);

    fs::create_directories(out_dir);
    const auto traj_path = (fs::path(out_dir) / "trajectory.csv").string();
    const auto contr_path = (fs::path(out_dir) / "contraction.json").string();
    pl::write_trajectory_csv(trajectory, traj_path);
    pl::write_contraction_json(estimate, contr_path);

    std::printf("point %d (param %.3f): optimal price %.6f\n", point,
                cfg.family.param_at(point), estimate.b_star);
    std::printf("trajectory: %zu steps to tau=%.3f, final implied price %.6f "
                "(%d clamp events)\n",
                trajectory.tau.size(), tau_end, trajectory.b.back(), trajectory.clamp_events);
    std::printf("contraction: c_hat %.4f, R^2 %.4f\n", estimate.c_hat, estimate.r_squared);
    std::printf("wrote %s and %s\n", traj_path.c_str(), contr_path.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Misspecified-linear-demand pricing learner: sweeps, ODE analysis, "
                 "and PAC certification"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed_value = 0;
    int workers = 1;
    double scale = 1.0;
    bool want_trace = false;
    bool want_check = false;
    std::string pac_spec;

    auto* run = app.add_subcommand("run", "Run a sweep and persist results");
    run->add_option("--config", config_path, "Sweep configuration (JSON)")->required();
    run->add_option("--out", out_dir, "Output directory (default: out)");
    auto* seed_opt = run->add_option("--seed", seed_value, "Master seed override");
    run->add_option("--workers", workers, "Worker thread count")
        ->check(CLI::PositiveNumber);
    run->add_option("--scale", scale,
                    "Scale the sigma-grid density by this fraction (rounds to >= 1 point)");
    run->add_flag("--trace", want_trace, "Write a per-period trace of the first episode");
    run->add_flag("--check", want_check,
                  "Evaluate the config's checks; exit 2 if any fail");
    run->add_option("--pac", pac_spec,
                    "Empirical PAC certification: mu=<f>,lambda=<f>,trials=<n>");

    std::string v_config;
    double v_grid_step = 0.0;
    auto* validate = app.add_subcommand("validate", "Check the configured family's "
                                                    "hazard-rate monotonicity");
    validate->add_option("--config", v_config, "Sweep configuration (JSON)")->required();
    validate->add_option("--grid-step", v_grid_step,
                         "Scan step (default: support width / 10^4)");

    std::string o_config;
    std::string o_out = "out";
    int o_point = 0;
    double o_tau_end = 10.0;
    double o_dt = 1e-3;
    auto* ode = app.add_subcommand("ode", "Integrate the mean dynamics and estimate "
                                          "the contraction rate");
    ode->add_option("--config", o_config, "Sweep configuration (JSON)")->required();
    ode->add_option("--out", o_out, "Output directory (default: out)");
    ode->add_option("--point", o_point, "Family point index (default: 0)");
    ode->add_option("--tau-end", o_tau_end, "Clock-time horizon (default: 10)");
    ode->add_option("--dt", o_dt, "Integrator step (default: 1e-3)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // Normalize CLI11's parse-error codes onto the documented contract:
        // 0 for --help/--version, 1 for bad usage.
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (run->parsed()) {
            std::optional<std::uint64_t> seed_override;
            if (seed_opt->count() > 0) seed_override = seed_value;
            return cmd_run(config_path, out_dir, seed_override, workers, scale, want_trace,
                           want_check, pac_spec);
        }
        if (validate->parsed()) {
            return cmd_validate(v_config, v_grid_step);
        }
        return cmd_ode(o_config, o_out, o_point, o_tau_end, o_dt);
    } catch (const pl::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
