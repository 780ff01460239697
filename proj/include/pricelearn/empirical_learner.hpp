#pragma once

#include <cstdint>
#include <vector>

#include "pricelearn/demand.hpp"
#include "pricelearn/market.hpp"
#include "pricelearn/random.hpp"

namespace pricelearn {

// Recursive empirical cdf on a fixed price grid. After t rounds,
// mass(v) = mass(v) + (1/t) * (batch fraction <= v  -  mass(v)), which for
// per-round batches reduces to the report-weighted pooled fraction; the class
// keeps per-bin weights and materializes the cumulative mass on demand.
class EmpiricalDistribution {
  public:
    EmpiricalDistribution(double lo, double hi, double grid_resolution);

    void observe(const ValuationBatch& batch); // one update round
    std::int64_t period() const { return period_; }
    const std::vector<double>& knots() const { return knots_; }
    std::vector<double> mass() const; // cumulative fraction per knot, in [0, 1]

    // sup over knots of |mass - F| against a reference curve.
    double sup_distance(const DemandCurve& curve) const;

  private:
    std::vector<double> knots_;
    std::vector<double> bin_weight_;
    std::int64_t period_ = 0;
};

// Functional form of one update round (returns the advanced distribution).
EmpiricalDistribution update_empirical(EmpiricalDistribution dist, const ValuationBatch& batch);

struct CrPrice {
    double price;    // grid argmax of p * (1 - mass(p)), ties to the lowest price
    double quantity; // 1 - mass at that price
};

CrPrice cr_price(const EmpiricalDistribution& dist);

struct CrEpisodeResult {
    double price_forecast;
    double quantity_forecast;
    double sup_distance; // final empirical cdf vs the true curve
};

// Feeds `horizon` rounds of `reports_per_period` fresh valuation reports into
// the empirical cdf and prices off the final estimate.
CrEpisodeResult run_cr_episode(const DemandCurve& curve, int reports_per_period,
                               std::int64_t horizon, double grid_resolution,
                               RandomStream& rng);

} // namespace pricelearn
