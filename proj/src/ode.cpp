#include "pricelearn/ode.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pricelearn/market.hpp"
#include "pricelearn/parallel.hpp"
#include "pricelearn/random.hpp"

namespace pricelearn {

namespace {

constexpr double kBeta0Floor = 1e-10;
constexpr double kBeta1Ceiling = -1e-10; // beta1 must stay strictly negative

std::array<double, 2> rhs(const DemandCurve& curve, const std::array<double, 2>& beta) {
    const double b = -beta[0] / (2.0 * beta[1]);
    const double F = curve.cdf(b);
    const double f = curve.pdf(b);
    return {1.0 - F + b * f - beta[0], -f - beta[1]};
}

struct LineFit {
    double slope;
    double intercept;
    double r_squared;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n;
    const double my = sy / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw std::invalid_argument("degenerate abscissa in line fit");
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (intercept + slope * x[i]);
        ss_res += r * r;
    }
    const double r2 = (syy > 0.0) ? 1.0 - ss_res / syy : 1.0;
    return LineFit{slope, intercept, r2};
}

} // namespace

std::array<double, 2> beta_rhs(const DemandCurve& curve, const std::array<double, 2>& beta) {
    if (!(std::isfinite(beta[0]) && std::isfinite(beta[1])) || !(beta[1] < 0.0)) {
        throw std::invalid_argument("mean dynamics need finite beliefs with negative slope");
    }
    return rhs(curve, beta);
}

double b_rhs(const DemandCurve& curve, double b, double beta1) {
    if (!(beta1 < 0.0)) throw std::invalid_argument("slope belief must be negative");
    // -f/(2 beta1) * [(1-F)/f - b] written in its removable-singularity form;
    // at f = 0 below the support it reduces to -1/(2 beta1).
    const double F = curve.cdf(b);
    const double f = curve.pdf(b);
    return -((1.0 - F) - b * f) / (2.0 * beta1);
}

OdeTrajectory integrate(const DemandCurve& curve, std::array<double, 2> beta, double tau_end,
                        double dt) {
    if (!(tau_end > 0.0) || !(dt > 0.0)) {
        throw std::invalid_argument("integration needs positive tau_end and dt");
    }
    if (!(std::isfinite(beta[0]) && std::isfinite(beta[1])) || !(beta[0] > 0.0) ||
        !(beta[1] < 0.0)) {
        throw std::invalid_argument("initial beliefs must be finite with beta0 > 0 > beta1");
    }
    const auto steps = static_cast<std::int64_t>(std::ceil(tau_end / dt - 1e-9));

    OdeTrajectory traj;
    traj.tau.reserve(static_cast<std::size_t>(steps) + 1);
    traj.beta.reserve(static_cast<std::size_t>(steps) + 1);
    traj.b.reserve(static_cast<std::size_t>(steps) + 1);
    auto record = [&](double tau, const std::array<double, 2>& x) {
        traj.tau.push_back(tau);
        traj.beta.push_back(x);
        traj.b.push_back(-x[0] / (2.0 * x[1]));
    };
    record(0.0, beta);

    double tau = 0.0;
    for (std::int64_t s = 0; s < steps; ++s) {
        const double h = std::min(dt, tau_end - tau);
        const auto k1 = rhs(curve, beta);
        const auto k2 = rhs(curve, {beta[0] + 0.5 * h * k1[0], beta[1] + 0.5 * h * k1[1]});
        const auto k3 = rhs(curve, {beta[0] + 0.5 * h * k2[0], beta[1] + 0.5 * h * k2[1]});
        const auto k4 = rhs(curve, {beta[0] + h * k3[0], beta[1] + h * k3[1]});
        beta[0] += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
        beta[1] += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
        if (!(std::isfinite(beta[0]) && std::isfinite(beta[1]))) {
            throw std::runtime_error("mean dynamics diverged to a non-finite state");
        }
        bool clamped = false;
        if (beta[0] < kBeta0Floor) {
            beta[0] = kBeta0Floor;
            clamped = true;
        }
        if (beta[1] > kBeta1Ceiling) {
            beta[1] = kBeta1Ceiling;
            clamped = true;
        }
        if (clamped) ++traj.clamp_events;
        tau = (s + 1 == steps) ? tau_end : tau + h;
        record(tau, beta);
    }
    return traj;
}

ContractionEstimate estimate_contraction(const DemandCurve& curve,
                                         const std::vector<std::array<double, 2>>& initial_grid,
                                         const std::vector<double>& mu_grid, double dt) {
    if (initial_grid.empty()) throw std::invalid_argument("empty initial grid");
    if (mu_grid.empty()) throw std::invalid_argument("empty mu grid");
    for (std::size_t i = 1; i < mu_grid.size(); ++i) {
        if (!(mu_grid[i] < mu_grid[i - 1])) {
            throw std::invalid_argument("mu grid must be strictly decreasing");
        }
    }
    if (!(mu_grid.back() > 0.0)) throw std::invalid_argument("mu values must be positive");

    const auto opt = optimal_price(curve);

    std::vector<double> worst_tau(mu_grid.size(), 0.0);
    std::vector<std::size_t> worst_idx(mu_grid.size(), 0);

    for (std::size_t g = 0; g < initial_grid.size(); ++g) {
        std::array<double, 2> beta = initial_grid[g];
        double tau = 0.0;
        double b = -beta[0] / (2.0 * beta[1]);
        std::size_t next_mu = 0;
        while (next_mu < mu_grid.size() && std::abs(b - opt.b_star) <= mu_grid[next_mu]) {
            ++next_mu; // already inside this tolerance at tau = 0
        }
        const double tau_cap = 400.0;
        while (next_mu < mu_grid.size()) {
            if (tau > tau_cap) {
                throw std::runtime_error(
                    "mean dynamics failed to contract to the requested tolerance");
            }
            const auto k1 = rhs(curve, beta);
            const auto k2 =
                rhs(curve, {beta[0] + 0.5 * dt * k1[0], beta[1] + 0.5 * dt * k1[1]});
            const auto k3 =
                rhs(curve, {beta[0] + 0.5 * dt * k2[0], beta[1] + 0.5 * dt * k2[1]});
            const auto k4 = rhs(curve, {beta[0] + dt * k3[0], beta[1] + dt * k3[1]});
            beta[0] += dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
            beta[1] += dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
            if (!(std::isfinite(beta[0]) && std::isfinite(beta[1])) || !(beta[1] < 0.0)) {
                throw std::runtime_error("mean dynamics left the admissible belief region");
            }
            tau += dt;
            b = -beta[0] / (2.0 * beta[1]);
            while (next_mu < mu_grid.size() && std::abs(b - opt.b_star) <= mu_grid[next_mu]) {
                if (tau > worst_tau[next_mu]) {
                    worst_tau[next_mu] = tau;
                    worst_idx[next_mu] = g;
                }
                ++next_mu;
            }
        }
    }

    ContractionEstimate est;
    est.b_star = opt.b_star;
    std::vector<double> x, y;
    for (std::size_t i = 0; i < mu_grid.size(); ++i) {
        est.tau_of.emplace_back(mu_grid[i], worst_tau[i]);
        x.push_back(-std::log(mu_grid[i]));
        y.push_back(worst_tau[i]);
    }
    const auto fit = fit_line(x, y);
    if (!(fit.slope > 0.0)) {
        throw std::runtime_error("time-to-tolerance did not grow with -ln(mu)");
    }
    est.c_hat = 1.0 / fit.slope;
    est.r_squared = fit.r_squared;
    est.worst_initial = initial_grid[worst_idx[mu_grid.size() - 1]];
    return est;
}

std::vector<std::array<double, 2>> default_contraction_grid(const DemandCurve& curve) {
    const auto opt = optimal_price(curve);
    const auto support = curve.support();
    const double f_star = curve.pdf(opt.b_star);
    if (!(f_star > 0.0)) {
        throw std::domain_error("optimal price sits where the density vanishes");
    }
    const double delta = 0.8 * std::min(opt.b_star - support.lo, support.hi - opt.b_star);
    const auto box = BeliefBox::for_curve(curve);

    std::vector<std::array<double, 2>> grid;
    for (const double off : {-delta, -0.5 * delta, 0.5 * delta, delta}) {
        for (const double mult : {0.75, 1.0, 1.5}) {
            const double beta1 = -mult * f_star;
            const double beta0 = -2.0 * (opt.b_star + off) * beta1;
            if (box.contains_inner(LinearBeliefs{beta0, beta1})) {
                grid.push_back({beta0, beta1});
            }
        }
    }
    if (grid.empty()) throw std::runtime_error("no admissible contraction grid points");
    return grid;
}

std::vector<double> default_mu_grid() { return {0.1, 0.03, 0.01, 0.003, 0.001}; }

EnsembleComparison compare_ensemble(const DemandCurve& curve, const EpisodeConfig& config,
                                    int n_seeds, double tau_end, std::uint64_t master_seed,
                                    int workers) {
    if (n_seeds < 1) throw std::invalid_argument("need at least one seed");
    if (!(tau_end > 0.0)) throw std::invalid_argument("tau_end must be positive");
    const double gain = config.schedule.constant_gain(); // throws on decreasing schedules

    const auto box = BeliefBox::for_curve(curve);
    const LinearBeliefs init = config.initial_beliefs.value_or(box.reset_point());

    // Sample clock grid, mapped to integer periods under tau = gain * t.
    const int n_samples = 100;
    std::vector<double> tau_grid;
    std::vector<std::int64_t> period_grid;
    for (int k = 0; k <= n_samples; ++k) {
        const double tau = tau_end * static_cast<double>(k) / n_samples;
        const auto t = static_cast<std::int64_t>(std::llround(tau / gain));
        tau_grid.push_back(tau);
        period_grid.push_back(t);
    }
    std::vector<std::int64_t> snapshot_periods;
    for (const auto t : period_grid) {
        if (t >= 1 && (snapshot_periods.empty() || t > snapshot_periods.back())) {
            snapshot_periods.push_back(t);
        }
    }
    if (snapshot_periods.empty()) {
        throw std::invalid_argument("tau_end is too short for the configured gain");
    }

    EpisodeConfig run_cfg = config;
    run_cfg.initial_beliefs = init;
    run_cfg.record_trace = false;
    run_cfg.snapshot_periods = snapshot_periods;
    run_cfg.horizon = snapshot_periods.back();

    std::vector<std::vector<double>> b_at(snapshot_periods.size(),
                                          std::vector<double>(n_seeds, 0.0));
    parallel_for_ordered(static_cast<std::size_t>(n_seeds), workers, [&](std::size_t seed_idx) {
        RandomStream rng = RandomStream::derive(master_seed, seed_idx);
        const auto result = run_episode(curve, run_cfg, box, rng);
        for (std::size_t s = 0; s < result.snapshots.size(); ++s) {
            b_at[s][seed_idx] = implied_price(result.snapshots[s].second);
        }
    });

    const auto traj = integrate(curve, {init.beta0, init.beta1}, tau_end);
    const double dt = traj.tau.size() > 1 ? traj.tau[1] - traj.tau[0] : 1.0;

    EnsembleComparison cmp;
    cmp.sup_deviation = 0.0;
    for (std::size_t k = 0; k < tau_grid.size(); ++k) {
        const auto idx = std::min(traj.b.size() - 1,
                                  static_cast<std::size_t>(std::llround(tau_grid[k] / dt)));
        double mean_b;
        if (period_grid[k] == 0) {
            mean_b = implied_price(init);
        } else {
            const auto it = std::lower_bound(snapshot_periods.begin(), snapshot_periods.end(),
                                             period_grid[k]);
            const auto s = static_cast<std::size_t>(it - snapshot_periods.begin());
            double acc = 0.0;
            for (const double v : b_at[s]) acc += v;
            mean_b = acc / static_cast<double>(n_seeds);
        }
        cmp.tau.push_back(tau_grid[k]);
        cmp.ode_b.push_back(traj.b[idx]);
        cmp.mean_b.push_back(mean_b);
        cmp.sup_deviation = std::max(cmp.sup_deviation, std::abs(mean_b - traj.b[idx]));
    }
    return cmp;
}

} // namespace pricelearn
