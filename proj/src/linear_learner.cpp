#include "pricelearn/linear_learner.hpp"

#include <cmath>
#include <stdexcept>

namespace pricelearn {

namespace {
constexpr double kPriceFloor = 1e-9; // posted prices stay strictly positive
}

GainSchedule GainSchedule::constant(double a, double ceiling) {
    if (!(ceiling > 0.0))
        throw std::invalid_argument("GainSchedule: ceiling must be positive");
    if (!(a > 0.0) || a > ceiling)
        throw std::invalid_argument("GainSchedule: constant gain must be in (0, ceiling]");
    return GainSchedule(Kind::Constant, a);
}

GainSchedule GainSchedule::decreasing(double omega) {
    if (!(omega > 0.5) || omega > 1.0)
        throw std::invalid_argument("GainSchedule: decreasing gain needs omega in (0.5, 1]");
    return GainSchedule(Kind::Decreasing, omega);
}

double GainSchedule::at(std::int64_t t) const {
    if (t < 1) throw std::invalid_argument("gain_at: periods start at 1");
    if (kind_ == Kind::Constant) return value_;
    return std::pow(static_cast<double>(t), -value_);
}

double GainSchedule::constant_gain() const {
    if (kind_ != Kind::Constant)
        throw std::logic_error("constant_gain queried on a decreasing schedule");
    return value_;
}

double gain_at(const GainSchedule& schedule, std::int64_t t) { return schedule.at(t); }

double PerturbationSpec::sigma1_sq() const {
    if (epsilon < 0.0) throw std::invalid_argument("PerturbationSpec: epsilon must be >= 0");
    return kind == Kind::UniformInterval ? epsilon * epsilon / 3.0 : epsilon * epsilon;
}

double PerturbationSpec::draw(RandomStream& rng) const {
    if (epsilon < 0.0) throw std::invalid_argument("PerturbationSpec: epsilon must be >= 0");
    const double u = rng.uniform01();
    if (kind == Kind::UniformInterval) return -epsilon + 2.0 * epsilon * u;
    return u < 0.5 ? -epsilon : epsilon;
}

BeliefBox BeliefBox::for_curve(const DemandCurve& curve, double q_min, double inflate) {
    if (!(q_min > 0.0) || !(q_min < 1.0))
        throw std::invalid_argument("BeliefBox: q_min must be in (0, 1)");
    if (!(inflate >= 1.0))
        throw std::invalid_argument("BeliefBox: inflate must be >= 1");
    const auto sup = curve.support();
    BeliefBox box;
    box.q_lo_ = q_min;
    box.q_hi_ = 1.0;
    box.price_lo_ = sup.lo;
    box.price_hi_ = sup.hi;
    box.beta1_mag_hi_ = std::max(4.0 * curve.pdf_sup(), 2.0 / (sup.hi - sup.lo));
    box.inflate_ = inflate;
    box.reset_ = LinearBeliefs{1.0, -1.0 / (sup.lo + sup.hi)};
    if (!box.contains_inner(box.reset_))
        throw std::logic_error("BeliefBox: reset point fell outside the sane region");
    return box;
}

bool BeliefBox::contains(const LinearBeliefs& b, double slack) const {
    if (!std::isfinite(b.beta0) || !std::isfinite(b.beta1)) return false;
    if (!(b.beta0 > 0.0) || !(b.beta1 < 0.0)) return false;
    const double q = 0.5 * b.beta0;
    if (q < q_lo_ / slack || q > q_hi_ * slack) return false;
    const double p = -b.beta0 / (2.0 * b.beta1);
    if (p < price_lo_ / slack || p > price_hi_ * slack) return false;
    if (-b.beta1 > beta1_mag_hi_ * slack) return false;
    return true;
}

bool BeliefBox::contains_inner(const LinearBeliefs& b) const { return contains(b, 1.0); }
bool BeliefBox::contains_outer(const LinearBeliefs& b) const { return contains(b, inflate_); }

double implied_price(const LinearBeliefs& beliefs) {
    if (!(beliefs.beta1 < 0.0))
        throw std::invalid_argument("implied_price: beta1 must be negative");
    return -beliefs.beta0 / (2.0 * beliefs.beta1);
}

double perturbed_price(const LinearBeliefs& beliefs, const PerturbationSpec& spec,
                       RandomStream& rng) {
    const double p = implied_price(beliefs) + spec.draw(rng);
    return p < kPriceFloor ? kPriceFloor : p;
}

Forecast forecast(const LinearBeliefs& beliefs) {
    const double q = 0.5 * beliefs.beta0;
    return Forecast{implied_price(beliefs), q > 1.0 ? 1.0 : q};
}

double forecast_error(const LinearBeliefs& beliefs, const MarketOutcome& outcome) {
    return outcome.quantity - (beliefs.beta0 + beliefs.beta1 * outcome.price);
}

std::array<double, 4> regression_matrix(const LinearBeliefs& beliefs,
                                        const PerturbationSpec& spec) {
    const double s2 = spec.sigma1_sq();
    if (!(s2 > 0.0))
        throw std::domain_error("regression_matrix: zero perturbation variance is singular");
    const double b = implied_price(beliefs);
    return {1.0, b, b, b * b + s2};
}

UpdateResult update(const LinearBeliefs& beliefs, const MarketOutcome& outcome, double gain,
                    const PerturbationSpec& spec, const BeliefBox& box) {
    if (!(gain > 0.0)) throw std::invalid_argument("update: gain must be positive");
    LinearBeliefs cand;
    if (outcome.quantity == 0.0) {
        cand = LinearBeliefs{beliefs.beta0 - gain, beliefs.beta1};
    } else if (outcome.quantity == 1.0) {
        cand = LinearBeliefs{beliefs.beta0 + gain, beliefs.beta1};
    } else {
        const double s2 = spec.sigma1_sq();
        if (!(s2 > 0.0))
            throw std::domain_error("update: zero perturbation variance is singular");
        const double b = implied_price(beliefs);
        const double p = outcome.price;
        const double phi = forecast_error(beliefs, outcome);
        // R^{-1} (1, p)' with R = [[1, b], [b, b^2 + s2]]; det R = s2 exactly.
        const double g0 = (b * b + s2 - b * p) / s2;
        const double g1 = (p - b) / s2;
        cand = LinearBeliefs{beliefs.beta0 + gain * phi * g0, beliefs.beta1 + gain * phi * g1};
    }
    if (!box.contains_outer(cand)) return UpdateResult{box.reset_point(), true};
    return UpdateResult{cand, false};
}

EpisodeResult run_episode(const DemandCurve& curve, const EpisodeConfig& config,
                          const BeliefBox& box, RandomStream& rng) {
    if (config.horizon < 1)
        throw std::invalid_argument("run_episode: horizon must be >= 1");
    if (config.n_buyers < 1)
        throw std::invalid_argument("run_episode: n_buyers must be >= 1");
    for (std::size_t i = 1; i < config.snapshot_periods.size(); ++i)
        if (config.snapshot_periods[i] <= config.snapshot_periods[i - 1])
            throw std::invalid_argument("run_episode: snapshot periods must be ascending");

    LinearBeliefs beliefs = config.initial_beliefs.value_or(box.reset_point());
    if (!box.contains_outer(beliefs))
        throw std::invalid_argument("run_episode: initial beliefs outside the projection region");

    EpisodeResult result;
    result.projection_count = 0;
    if (config.record_trace) result.trace.reserve(static_cast<std::size_t>(config.horizon));
    result.snapshots.reserve(config.snapshot_periods.size());

    auto snap = config.snapshot_periods.begin();
    for (std::int64_t t = 1; t <= config.horizon; ++t) {
        const double gain = config.schedule.at(t);
        const double posted = perturbed_price(beliefs, config.perturbation, rng);
        const MarketOutcome outcome = realize_demand(curve, posted, config.n_buyers, rng);
        const UpdateResult step = update(beliefs, outcome, gain, config.perturbation, box);
        if (config.record_trace) {
            result.trace.push_back(TraceRow{t, beliefs.beta0, beliefs.beta1,
                                            implied_price(beliefs), posted, outcome.quantity,
                                            forecast_error(beliefs, outcome),
                                            step.projected ? 1 : 0});
        }
        beliefs = step.beliefs;
        if (step.projected) ++result.projection_count;
        if (snap != config.snapshot_periods.end() && *snap == t) {
            result.snapshots.emplace_back(t, beliefs);
            ++snap;
        }
    }
    result.final_beliefs = beliefs;
    result.final_forecast = forecast(beliefs);
    return result;
}

std::int64_t stop_time(double mu, double a, double tau_of_mu) {
    if (!(mu > 0.0)) throw std::invalid_argument("stop_time: mu must be positive");
    if (!(a > 0.0)) throw std::invalid_argument("stop_time: gain must be positive");
    if (!(tau_of_mu > 0.0)) throw std::invalid_argument("stop_time: tau must be positive");
    return static_cast<std::int64_t>(std::ceil(tau_of_mu / a));
}

} // namespace pricelearn
