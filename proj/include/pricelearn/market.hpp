#pragma once

#include <vector>

#include "pricelearn/demand.hpp"
#include "pricelearn/random.hpp"

namespace pricelearn {

// One trading period: posted price and realized sold fraction (k / n_buyers).
struct MarketOutcome {
    double price;
    double quantity;
};

struct ValuationBatch {
    std::vector<double> values;
};

// N buyers draw valuations i.i.d. from the curve and buy when v >= price.
// Consumes exactly n_buyers uniforms, one per buyer in buyer order, so the
// quantity equals the thresholded average over realize_valuations run on the
// same stream state.
MarketOutcome realize_demand(const DemandCurve& curve, double price, int n_buyers,
                             RandomStream& rng);

// Raw valuation reports (one inverse-cdf draw each, in draw order).
ValuationBatch realize_valuations(const DemandCurve& curve, int count, RandomStream& rng);

// Same draws written into a caller-owned buffer (hot loops avoid reallocation).
void realize_valuations_into(const DemandCurve& curve, int count, RandomStream& rng,
                             std::vector<double>& out);

} // namespace pricelearn
