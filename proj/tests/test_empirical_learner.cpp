#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "pricelearn/demand.hpp"
#include "pricelearn/empirical_learner.hpp"
#include "pricelearn/market.hpp"
#include "pricelearn/random.hpp"

using namespace pricelearn;

namespace {

// Test-side oracle: the literal per-knot recursion
// m_t(v) = m_{t-1}(v) + (1/t) * (batch fraction <= v - m_{t-1}(v)).
struct RecursiveCdfOracle {
    std::vector<double> knots;
    std::vector<double> m;
    long long t = 0;

    explicit RecursiveCdfOracle(std::vector<double> k)
        : knots(std::move(k)), m(knots.size(), 0.0) {}

    void observe(const std::vector<double>& batch) {
        ++t;
        for (std::size_t k = 0; k < knots.size(); ++k) {
            double count = 0.0;
            for (const double v : batch) {
                if (v <= knots[k]) count += 1.0;
            }
            const double frac = count / static_cast<double>(batch.size());
            m[k] += (frac - m[k]) / static_cast<double>(t);
        }
    }
};

} // namespace

TEST_CASE("grid construction and validation") {
    EmpiricalDistribution d(0.0, 1.0, 0.25);
    REQUIRE(d.knots().size() == 5);
    CHECK(d.knots().front() == 0.0);
    CHECK(d.knots().back() == 1.0);
    CHECK(d.knots()[2] == 0.5);

    CHECK_THROWS_AS(EmpiricalDistribution(1.0, 0.0, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(EmpiricalDistribution(0.0, 1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(EmpiricalDistribution(0.0, 1.0, 2.0), std::invalid_argument);

    const auto fresh = d.mass(); // no observations yet: flat zero mass
    CHECK(*std::max_element(fresh.begin(), fresh.end()) == 0.0);
    CHECK_THROWS_AS(d.observe(ValuationBatch{}), std::invalid_argument);
}

TEST_CASE("two rounds average to the pooled fraction") {
    EmpiricalDistribution d(0.0, 1.0, 0.5); // knots 0, 0.5, 1
    d.observe(ValuationBatch{{0.3}});
    {
        const auto m = d.mass();
        CHECK(m[0] == 0.0);
        CHECK(m[1] == 1.0);
        CHECK(m[2] == 1.0);
    }
    d.observe(ValuationBatch{{0.7}});
    {
        const auto m = d.mass();
        CHECK(m[0] == 0.0);
        CHECK(m[1] == 0.5);
        CHECK(m[2] == 1.0);
    }
    CHECK(d.period() == 2);
}

TEST_CASE("matches the literal recursion and a retained-report recount") {
    EmpiricalDistribution d(0.0, 1.0, 0.01);
    RecursiveCdfOracle oracle(d.knots());
    std::vector<double> all_reports;
    RandomStream rng(33071);

    const int rounds = 100;
    const int reports = 3;
    for (int t = 0; t < rounds; ++t) {
        std::vector<double> batch(reports);
        for (auto& v : batch) v = rng.uniform01();
        all_reports.insert(all_reports.end(), batch.begin(), batch.end());
        d.observe(ValuationBatch{batch});
        oracle.observe(batch);
    }

    const auto got = d.mass();
    REQUIRE(got.size() == oracle.m.size());
    for (std::size_t k = 0; k < got.size(); ++k) {
        CHECK(std::abs(got[k] - oracle.m[k]) <= 1e-12);
        double count = 0.0;
        for (const double v : all_reports) {
            if (v <= d.knots()[k]) count += 1.0;
        }
        const double pooled = count / static_cast<double>(all_reports.size());
        CHECK(std::abs(got[k] - pooled) <= 1e-12);
    }
}

TEST_CASE("functional update equals in-place observe") {
    EmpiricalDistribution base(0.0, 1.0, 0.1);
    auto advanced = update_empirical(base, ValuationBatch{{0.42, 0.9}});
    base.observe(ValuationBatch{{0.42, 0.9}});
    CHECK(advanced.period() == base.period());
    CHECK(advanced.mass() == base.mass());
}

TEST_CASE("cr price maximizes grid revenue and breaks ties low") {
    {
        EmpiricalDistribution d(0.0, 1.0, 0.001);
        d.observe(ValuationBatch{{0.3}});
        const auto cr = cr_price(d);
        CHECK(cr.price >= 0.295);
        CHECK(cr.price <= 0.3 + 0.0011);
        CHECK(cr.quantity == 1.0);
    }
    {
        // Mass 0.5 at knot 0.5 makes revenue(0.25) == revenue(0.5) == 0.25 exactly.
        EmpiricalDistribution d(0.0, 1.0, 0.25);
        d.observe(ValuationBatch{{0.3, 0.6}});
        d.observe(ValuationBatch{{0.3, 0.6}});
        const auto cr = cr_price(d);
        CHECK(cr.price == 0.25);
        CHECK(cr.quantity == 1.0);
    }
    {
        EmpiricalDistribution empty(0.0, 1.0, 0.5);
        CHECK_THROWS_AS(cr_price(empty), std::logic_error);
    }
}

TEST_CASE("empirical cdf converges to the sampling curve") {
    auto uniform = DemandCurve::uniform(0.0, 1.0);
    RandomStream rng = RandomStream::derive(512, 0);

    EmpiricalDistribution d(0.0, 1.0, 0.001);
    ValuationBatch batch;
    double sup_early = 0.0;
    for (int t = 0; t < 20000; ++t) {
        realize_valuations_into(uniform, 10, rng, batch.values);
        d.observe(batch);
        if (t == 199) sup_early = d.sup_distance(uniform);
    }
    const double sup_late = d.sup_distance(uniform);
    CHECK(sup_late < sup_early);
    CHECK(sup_late < 0.01);

    auto gaussian = DemandCurve::truncated_gaussian(10.0, 11.0);
    RandomStream rng2 = RandomStream::derive(512, 1);
    const auto support = gaussian.support();
    EmpiricalDistribution g(support.lo, support.hi, 0.001 * (support.hi - support.lo));
    for (int t = 0; t < 5000; ++t) {
        realize_valuations_into(gaussian, 10, rng2, batch.values);
        g.observe(batch);
    }
    CHECK(g.sup_distance(gaussian) < 0.02);
}

TEST_CASE("cr episode prices near the optimum on the uniform market") {
    auto curve = DemandCurve::uniform(0.0, 1.0);
    RandomStream a = RandomStream::derive(2601, 4);
    RandomStream b = RandomStream::derive(2601, 4);
    const auto r1 = run_cr_episode(curve, 10, 2000, 0.001, a);
    const auto r2 = run_cr_episode(curve, 10, 2000, 0.001, b);
    CHECK(r1.price_forecast == r2.price_forecast); // seeded determinism
    CHECK(r1.sup_distance == r2.sup_distance);
    CHECK(std::abs(r1.price_forecast - 0.5) < 0.05);
    CHECK(std::abs(r1.quantity_forecast - 0.5) < 0.05);
    CHECK(r1.sup_distance < 0.02);

    RandomStream c = RandomStream::derive(2601, 5);
    CHECK_THROWS_AS(run_cr_episode(curve, 0, 10, 0.001, c), std::invalid_argument);
    CHECK_THROWS_AS(run_cr_episode(curve, 2, 0, 0.001, c), std::invalid_argument);
}
