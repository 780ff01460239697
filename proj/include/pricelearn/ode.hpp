#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "pricelearn/demand.hpp"
#include "pricelearn/linear_learner.hpp"

namespace pricelearn {

// Mean dynamics of the constant-gain learner in rescaled clock time tau = a*t:
//   beta0' = 1 - F(b) + b f(b) - beta0
//   beta1' = -f(b) - beta1          with b = -beta0 / (2 beta1).
struct OdeTrajectory {
    std::vector<double> tau;
    std::vector<std::array<double, 2>> beta;
    std::vector<double> b; // implied price along the path
    int clamp_events = 0;  // steps pulled back into the admissible region
};

std::array<double, 2> beta_rhs(const DemandCurve& curve, const std::array<double, 2>& beta);

// Implied-price drift -f(b)/(2 beta1) * [(1 - F(b))/f(b) - b]; at f(b) = 0 the
// boundary construction takes over and the drift is -1/(2 beta1).
double b_rhs(const DemandCurve& curve, double b, double beta1);

// Classic fixed-step fourth-order Runge-Kutta on beta_rhs.
OdeTrajectory integrate(const DemandCurve& curve, std::array<double, 2> beta_init,
                        double tau_end, double dt = 1e-3);

struct ContractionEstimate {
    double c_hat;   // worst-case exponential contraction rate of |b - b*|
    double b_star;
    std::vector<std::pair<double, double>> tau_of; // (mu, worst clock time to reach mu)
    double r_squared;                              // fit of tau(mu) against -ln(mu)
    std::array<double, 2> worst_initial;            // grid point with the largest tau
};

// Integrates from every grid point and measures the contraction envelope and
// the time-to-mu table. Default grids via the helpers below.
ContractionEstimate estimate_contraction(const DemandCurve& curve,
                                         const std::vector<std::array<double, 2>>& initial_grid,
                                         const std::vector<double>& mu_grid, double dt = 1e-3);

std::vector<std::array<double, 2>> default_contraction_grid(const DemandCurve& curve);
std::vector<double> default_mu_grid();

struct EnsembleComparison {
    std::vector<double> tau;    // sample clock times
    std::vector<double> ode_b;  // ODE implied price at each sample time
    std::vector<double> mean_b; // ensemble mean implied price at matching periods
    double sup_deviation;
};

// Runs n_seeds stochastic episodes (constant gain) and compares the ensemble
// mean implied-price path against the ODE under tau = a * t.
EnsembleComparison compare_ensemble(const DemandCurve& curve, const EpisodeConfig& config,
                                    int n_seeds, double tau_end, std::uint64_t master_seed,
                                    int workers = 1);

} // namespace pricelearn
