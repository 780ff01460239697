#include "pricelearn/market.hpp"

#include <stdexcept>

namespace pricelearn {

MarketOutcome realize_demand(const DemandCurve& curve, double price, int n_buyers,
                             RandomStream& rng) {
    if (n_buyers < 1) throw std::invalid_argument("realize_demand: n_buyers must be >= 1");
    // Buyer i purchases iff v_i >= price, i.e. iff u_i >= F(price) under the
    // shared inverse-cdf transform, so F is evaluated once per period.
    const double threshold = curve.cdf(price);
    int sold = 0;
    for (int i = 0; i < n_buyers; ++i) {
        if (rng.uniform01() >= threshold) ++sold;
    }
    return MarketOutcome{price, static_cast<double>(sold) / static_cast<double>(n_buyers)};
}

ValuationBatch realize_valuations(const DemandCurve& curve, int count, RandomStream& rng) {
    ValuationBatch batch;
    realize_valuations_into(curve, count, rng, batch.values);
    return batch;
}

void realize_valuations_into(const DemandCurve& curve, int count, RandomStream& rng,
                             std::vector<double>& out) {
    if (count < 1) throw std::invalid_argument("realize_valuations: count must be >= 1");
    out.resize(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = sample_valuation(curve, rng);
}

} // namespace pricelearn
