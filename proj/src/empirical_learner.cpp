#include "pricelearn/empirical_learner.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace pricelearn {

EmpiricalDistribution::EmpiricalDistribution(double lo, double hi, double grid_resolution) {
    if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi)) {
        throw std::invalid_argument("empirical grid needs finite lo < hi");
    }
    if (!(grid_resolution > 0.0) || grid_resolution >= hi - lo) {
        throw std::invalid_argument("grid resolution must be positive and finer than the range");
    }
    const double width = hi - lo;
    const auto steps = static_cast<std::size_t>(std::ceil(width / grid_resolution - 1e-9));
    knots_.resize(steps + 1);
    for (std::size_t k = 0; k < steps; ++k) {
        knots_[k] = lo + static_cast<double>(k) * grid_resolution;
    }
    knots_[steps] = hi;
    bin_weight_.assign(knots_.size(), 0.0);
}

void EmpiricalDistribution::observe(const ValuationBatch& batch) {
    if (batch.values.empty()) {
        throw std::invalid_argument("a report batch must contain at least one valuation");
    }
    const double weight = 1.0 / static_cast<double>(batch.values.size());
    for (const double v : batch.values) {
        // First knot >= v carries the report so that mass(knot) counts v.
        auto it = std::lower_bound(knots_.begin(), knots_.end(), v);
        const std::size_t idx =
            (it == knots_.end()) ? knots_.size() - 1
                                 : static_cast<std::size_t>(it - knots_.begin());
        bin_weight_[idx] += weight;
    }
    ++period_;
}

std::vector<double> EmpiricalDistribution::mass() const {
    std::vector<double> out(knots_.size(), 0.0);
    if (period_ == 0) return out;
    const double scale = 1.0 / static_cast<double>(period_);
    double acc = 0.0;
    for (std::size_t k = 0; k < knots_.size(); ++k) {
        acc += bin_weight_[k];
        out[k] = std::min(1.0, std::max(0.0, acc * scale));
    }
    return out;
}

double EmpiricalDistribution::sup_distance(const DemandCurve& curve) const {
    const auto m = mass();
    double sup = 0.0;
    for (std::size_t k = 0; k < knots_.size(); ++k) {
        sup = std::max(sup, std::abs(m[k] - curve.cdf(knots_[k])));
    }
    return sup;
}

EmpiricalDistribution update_empirical(EmpiricalDistribution dist, const ValuationBatch& batch) {
    dist.observe(batch);
    return dist;
}

CrPrice cr_price(const EmpiricalDistribution& dist) {
    if (dist.period() == 0) {
        throw std::logic_error("cannot price off an empirical distribution with no observations");
    }
    const auto& knots = dist.knots();
    const auto m = dist.mass();
    std::size_t best = 0;
    double best_revenue = knots[0] * (1.0 - m[0]);
    for (std::size_t k = 1; k < knots.size(); ++k) {
        const double revenue = knots[k] * (1.0 - m[k]);
        if (revenue > best_revenue) { // strict: ties resolve to the lowest price
            best_revenue = revenue;
            best = k;
        }
    }
    return CrPrice{knots[best], 1.0 - m[best]};
}

CrEpisodeResult run_cr_episode(const DemandCurve& curve, int reports_per_period,
                               std::int64_t horizon, double grid_resolution, RandomStream& rng) {
    if (reports_per_period < 1) {
        throw std::invalid_argument("reports_per_period must be at least 1");
    }
    if (horizon < 1) {
        throw std::invalid_argument("horizon must be at least 1");
    }
    const auto support = curve.support();
    EmpiricalDistribution dist(support.lo, support.hi, grid_resolution);
    ValuationBatch batch;
    for (std::int64_t t = 0; t < horizon; ++t) {
        realize_valuations_into(curve, reports_per_period, rng, batch.values);
        dist.observe(batch);
    }
    const auto priced = cr_price(dist);
    return CrEpisodeResult{priced.price, priced.quantity, dist.sup_distance(curve)};
}

} // namespace pricelearn
