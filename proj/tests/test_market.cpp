#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pricelearn/demand.hpp"
#include "pricelearn/market.hpp"
#include "pricelearn/random.hpp"

using namespace pricelearn;

TEST_CASE("demand realization and thresholded valuations are the same draw") {
    auto curves = std::vector<DemandCurve>{
        DemandCurve::uniform(0.0, 1.0),
        DemandCurve::truncated_gaussian(10.0, 11.0),
    };
    int id = 0;
    for (const auto& c : curves) {
        const auto sup = c.support();
        for (int trial = 0; trial < 200; ++trial) {
            RandomStream a = RandomStream::derive(555, static_cast<std::uint64_t>(trial), id);
            RandomStream b = RandomStream::derive(555, static_cast<std::uint64_t>(trial), id);
            const double price = sup.lo + (sup.hi - sup.lo) * (0.101 + 0.004 * trial);
            const int n = 100;
            const MarketOutcome outcome = realize_demand(c, price, n, a);
            const ValuationBatch batch = realize_valuations(c, n, b);
            int sold = 0;
            for (double v : batch.values)
                if (v >= price) ++sold;
            CHECK(outcome.quantity == static_cast<double>(sold) / n); // exact
        }
        ++id;
    }
}

TEST_CASE("quantity is an exact multiple of 1/N") {
    auto c = DemandCurve::uniform(0.0, 1.0);
    RandomStream rng(77);
    for (int n : {1, 7, 100}) {
        for (int i = 0; i < 50; ++i) {
            const auto out = realize_demand(c, 0.3 + 0.01 * i / 5.0, n, rng);
            const double k = std::round(out.quantity * n);
            CHECK(out.quantity == k / static_cast<double>(n));
            CHECK(k >= 0);
            CHECK(k <= n);
        }
    }
}

TEST_CASE("degenerate prices clear or close the market") {
    auto c = DemandCurve::truncated_gaussian(10.0, 11.0);
    RandomStream rng(1234);
    for (int i = 0; i < 100; ++i) {
        CHECK(realize_demand(c, 9.5, 100, rng).quantity == 1.0);  // below support: everyone buys
        CHECK(realize_demand(c, 10.0, 100, rng).quantity == 1.0); // tie at the support edge buys
        CHECK(realize_demand(c, 98.0, 100, rng).quantity == 0.0); // saturated tail: no one buys
    }
}

TEST_CASE("sale frequency tracks 1 - F(p)") {
    auto c = DemandCurve::uniform(0.0, 1.0);
    RandomStream rng(31337);
    const double price = 0.37;
    const int periods = 20000;
    double acc = 0.0;
    for (int t = 0; t < periods; ++t) acc += realize_demand(c, price, 100, rng).quantity;
    CHECK(acc / periods == doctest::Approx(1.0 - price).epsilon(0.005));
}

TEST_CASE("report count is independent of the buyer population") {
    auto c = DemandCurve::uniform(0.0, 1.0);
    RandomStream rng(9);
    const auto batch = realize_valuations(c, 7, rng);
    CHECK(batch.values.size() == 7);
    for (double v : batch.values) {
        CHECK(v >= 0.0);
        CHECK(v < 1.0);
    }
    CHECK_THROWS_AS(realize_valuations(c, 0, rng), std::invalid_argument);
    CHECK_THROWS_AS(realize_demand(c, 0.5, 0, rng), std::invalid_argument);
}
