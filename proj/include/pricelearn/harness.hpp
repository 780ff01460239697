#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pricelearn/demand.hpp"
#include "pricelearn/empirical_learner.hpp"
#include "pricelearn/linear_learner.hpp"
#include "pricelearn/ode.hpp"

namespace pricelearn {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FamilyConfig {
    enum class Kind { Uniform, TruncatedGaussian, Tabulated };
    Kind kind = Kind::Uniform;
    double lo = 0.0, hi = 1.0;              // uniform
    double mean = 10.0;                      // truncated gaussian
    double sigma_lo = 11.0, sigma_hi = 16.0; // swept sigma range, endpoints included
    int sigma_count = 1;
    std::string path;                        // tabulated

    int point_count() const;
    double param_at(int index) const;        // sigma for the swept family, else 0
    DemandCurve curve_at(int index) const;
};

struct LinearRunConfig {
    double gain = 1e-3;
    double gain_ceiling = 0.1;
    double epsilon = 0.05;
    PerturbationSpec::Kind perturbation = PerturbationSpec::Kind::UniformInterval;
    double q_min = 0.01;
    double box_inflate = 1.1;
    std::optional<LinearBeliefs> initial_beliefs;

    PerturbationSpec perturbation_spec() const { return {perturbation, epsilon}; }
};

struct BaselineRunConfig {
    std::vector<int> reports_per_period; // empty: skip the baseline learner
    double grid_resolution_rel = 1e-3;   // grid step as a fraction of support width
};

struct SweepConfig {
    FamilyConfig family;
    std::int64_t horizon = 1000;
    int n_buyers = 100;
    std::uint64_t seed = 1;
    int replications = 1;
    double bin_width = 0.01;
    LinearRunConfig linear;
    BaselineRunConfig baseline;
    std::map<std::string, std::array<double, 2>> checks;
};

SweepConfig load_config(const std::string& path);     // throws ConfigError
SweepConfig parse_config(const std::string& json_text);
std::string config_to_json(const SweepConfig& config); // canonical echo

// One sweep point x replication: learner errors against the oracle optimum.
struct SweepPointResult {
    double sigma;
    double b_star;
    double q_star;
    double lin_err_price;  // final forecast price - b_star
    double lin_err_qty;    // final forecast quantity - q_star
    std::int64_t lin_projections;
    std::vector<double> cr_err_price; // per configured K
    std::vector<double> cr_sup_dist;  // per configured K
};

struct SweepResult {
    SweepConfig config;
    std::vector<SweepPointResult> points; // point-major, replication-minor order
};

SweepResult run_sweep(const SweepConfig& config, int workers = 1);

struct HistogramBin {
    double center;
    std::int64_t count;
};

struct ErrorStats {
    std::int64_t n = 0;
    double mean = 0.0;
    double variance = 0.0; // population variance
    double bin_width = 0.01;
    std::vector<HistogramBin> histogram; // bins centered at integer multiples of bin_width
};

ErrorStats summarize(const std::vector<double>& errors, double bin_width = 0.01);

struct SweepSummary {
    ErrorStats linear_price;
    ErrorStats linear_quantity;
    std::map<int, ErrorStats> cr_price;    // by K
    std::map<int, double> cr_sup_mean;     // by K
    std::int64_t projections_total = 0;
};

SweepSummary summarize_sweep(const SweepResult& result);

struct CheckOutcome {
    std::string name;
    double value;
    double lo;
    double hi;
    bool passed;
};

// Evaluates config "checks" entries against the sweep summary.
std::vector<CheckOutcome> evaluate_checks(const SweepResult& result, const SweepSummary& summary);

struct PacCheckpoint {
    std::int64_t t;
    std::int64_t failures;
    double rate;
};

struct PacCertificate {
    double mu;
    double lambda;
    std::int64_t t_used;
    int n_trials;
    std::int64_t failures;     // at t_used
    double failure_rate;       // failures / n_trials
    double failure_rate_upper; // one-sided 95% Clopper-Pearson bound
    bool passed;               // failure_rate_upper <= lambda
    double rho_hat;            // fitted exponential decay rate over checkpoints
    std::vector<PacCheckpoint> checkpoints; // t_used/4, t_used/2, t_used
};

// Empirical certification of the 4*mu accuracy event at T = stop_time(mu, a,
// tau_mu). Trials start from `initial` (default: box reset point) and are
// evaluated at interim checkpoints of the same trajectories.
PacCertificate pac_certify(const DemandCurve& curve, const LinearRunConfig& linear,
                           int n_buyers, double mu, double lambda, int n_trials, double tau_mu,
                           std::uint64_t master_seed, int workers = 1,
                           std::optional<LinearBeliefs> initial = std::nullopt);

// One-sided upper confidence bound for a binomial proportion (exact).
double binomial_upper_bound(std::int64_t failures, std::int64_t trials, double alpha = 0.05);

// sweep.csv, summary.json, histogram_<learner>.csv under out_dir; byte-stable
// for a fixed config and seed.
void emit_results(const SweepResult& result, const SweepSummary& summary,
                  const std::string& out_dir);
void write_pac_json(const PacCertificate& cert, const std::string& path);
void write_trajectory_csv(const OdeTrajectory& trajectory, const std::string& path);
void write_contraction_json(const ContractionEstimate& estimate, const std::string& path);

// Optional per-period trace of one linear-learner episode (same draws as the
// sweep's point 0 linear run).
void write_trace_csv(const std::vector<TraceRow>& trace, const std::string& path);

} // namespace pricelearn
