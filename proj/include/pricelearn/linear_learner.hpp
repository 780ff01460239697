#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "pricelearn/demand.hpp"
#include "pricelearn/market.hpp"
#include "pricelearn/random.hpp"

namespace pricelearn {

// Linear demand model q = beta0 + beta1 * p with beta0 > 0, beta1 < 0.
struct LinearBeliefs {
    double beta0;
    double beta1;
};

// Price and quantity the learner forecasts from its current beliefs:
// price -beta0 / (2 * beta1), quantity beta0 / 2 (clamped into (0, 1]).
struct Forecast {
    double price;
    double quantity;
};

class GainSchedule {
  public:
    enum class Kind { Constant, Decreasing };

    // Constant gain a in (0, ceiling].
    static GainSchedule constant(double a, double ceiling = 0.1);
    // Decreasing gain t^(-omega), omega in (0.5, 1].
    static GainSchedule decreasing(double omega);

    Kind kind() const { return kind_; }
    double at(std::int64_t t) const; // t >= 1
    double constant_gain() const;    // throws unless Kind::Constant

  private:
    GainSchedule(Kind k, double v) : kind_(k), value_(v) {}
    Kind kind_;
    double value_;
};

double gain_at(const GainSchedule& schedule, std::int64_t t);

// Price experimentation noise eps1 with known variance sigma1^2:
// UniformInterval on [-eps, eps] (sigma1^2 = eps^2/3) or BinaryPoints
// {-eps, +eps} (sigma1^2 = eps^2).
struct PerturbationSpec {
    enum class Kind { UniformInterval, BinaryPoints };
    Kind kind = Kind::UniformInterval;
    double epsilon = 0.0;

    double sigma1_sq() const;
    double draw(RandomStream& rng) const; // one uniform consumed
};

// Projection facility: an inner region S of sane beliefs and an outer region B
// inflated by `inflate` per coordinate. Candidates leaving B are replaced by
// the reset point, which sits in the interior of S.
class BeliefBox {
  public:
    static BeliefBox for_curve(const DemandCurve& curve, double q_min = 0.01,
                               double inflate = 1.1);

    bool contains_inner(const LinearBeliefs& b) const;
    bool contains_outer(const LinearBeliefs& b) const;
    LinearBeliefs reset_point() const { return reset_; }
    double price_lo() const { return price_lo_; }
    double price_hi() const { return price_hi_; }

  private:
    BeliefBox() = default;
    double q_lo_ = 0.0, q_hi_ = 0.0;          // bounds on beta0 / 2
    double price_lo_ = 0.0, price_hi_ = 0.0;  // bounds on -beta0 / (2 beta1)
    double beta1_mag_hi_ = 0.0;               // cap on |beta1|
    double inflate_ = 1.1;
    LinearBeliefs reset_{1.0, -1.0};
    bool contains(const LinearBeliefs& b, double slack) const;
};

double implied_price(const LinearBeliefs& beliefs);

// Implied price plus a perturbation draw, clamped to stay strictly positive.
double perturbed_price(const LinearBeliefs& beliefs, const PerturbationSpec& spec,
                       RandomStream& rng);

Forecast forecast(const LinearBeliefs& beliefs);

// Realized quantity minus the model-implied quantity at the posted price.
double forecast_error(const LinearBeliefs& beliefs, const MarketOutcome& outcome);

// Known second-moment matrix of the regressor (1, p) at the current implied
// price b: [[1, b], [b, b^2 + sigma1^2]], row-major. det = sigma1^2.
std::array<double, 4> regression_matrix(const LinearBeliefs& beliefs,
                                        const PerturbationSpec& spec);

struct UpdateResult {
    LinearBeliefs beliefs;
    bool projected;
};

// One recursive least-squares step. Sold-out and no-sale periods move beta0 by
// +/- gain with beta1 frozen; interior periods apply gain * R^{-1} (1,p)' phi.
// Candidates outside the outer box (or non-finite) are projected to the reset
// point and flagged.
UpdateResult update(const LinearBeliefs& beliefs, const MarketOutcome& outcome, double gain,
                    const PerturbationSpec& spec, const BeliefBox& box);

struct TraceRow {
    std::int64_t period;
    double beta0;
    double beta1;
    double implied_price;
    double posted_price;
    double quantity;
    double forecast_error;
    int projected;
};

struct EpisodeConfig {
    GainSchedule schedule = GainSchedule::constant(1e-3);
    PerturbationSpec perturbation{PerturbationSpec::Kind::UniformInterval, 0.05};
    int n_buyers = 100;
    std::int64_t horizon = 0;
    std::optional<LinearBeliefs> initial_beliefs; // default: box reset point
    bool record_trace = false;
    std::vector<std::int64_t> snapshot_periods;   // ascending, each in [1, horizon]
};

struct EpisodeResult {
    LinearBeliefs final_beliefs;
    Forecast final_forecast;
    std::int64_t projection_count;
    std::vector<TraceRow> trace;
    std::vector<std::pair<std::int64_t, LinearBeliefs>> snapshots;
};

EpisodeResult run_episode(const DemandCurve& curve, const EpisodeConfig& config,
                          const BeliefBox& box, RandomStream& rng);

// Period count ceil(tau_of_mu / a) for running a constant-gain learner to
// accuracy mu; tau_of_mu is the clock-time budget (see ode contraction).
std::int64_t stop_time(double mu, double a, double tau_of_mu);

} // namespace pricelearn
