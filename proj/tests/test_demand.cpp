#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <vector>

#include "pricelearn/demand.hpp"
#include "pricelearn/random.hpp"

using namespace pricelearn;

namespace {

// Test-side oracle: composite Simpson integration of the density.
double simpson_cdf(const DemandCurve& curve, double upper, int panels = 20000) {
    const double lo = curve.support().lo;
    if (upper <= lo) return 0.0;
    const double h = (upper - lo) / (2.0 * panels);
    double acc = curve.pdf(lo) + curve.pdf(upper);
    for (int i = 1; i < 2 * panels; ++i)
        acc += curve.pdf(lo + i * h) * ((i % 2) ? 4.0 : 2.0);
    return acc * h / 3.0;
}

// Test-side oracle: revenue argmax on a dense grid, ties to the lowest price.
double grid_argmax_revenue(const DemandCurve& curve, double hi, double step) {
    double best_p = curve.support().lo;
    double best_rev = best_p * curve.survival(best_p);
    for (double p = best_p + step; p <= hi; p += step) {
        const double rev = p * curve.survival(p);
        if (rev > best_rev) {
            best_rev = rev;
            best_p = p;
        }
    }
    return best_p;
}

} // namespace

TEST_CASE("uniform curve basic shape") {
    auto c = DemandCurve::uniform(0.0, 1.0);
    CHECK(c.cdf(0.0) == 0.0);
    CHECK(c.cdf(1.0) == 1.0);
    CHECK(c.cdf(0.25) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(c.pdf(0.5) == doctest::Approx(1.0));
    CHECK(c.survival(0.25) == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(c.quantile(0.0) == 0.0);
    CHECK(c.quantile(0.9) == doctest::Approx(0.9).epsilon(1e-14));
    CHECK_THROWS_AS(DemandCurve::uniform(1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS((void)c.quantile(1.0), std::invalid_argument);
}

TEST_CASE("half-normal matches closed forms") {
    auto c = DemandCurve::truncated_gaussian(10.0, 11.0);
    CHECK(c.support().lo == 10.0);
    CHECK(c.support().hi == doctest::Approx(98.0));
    CHECK(c.pdf(10.0) == doctest::Approx(0.07253496007298776).epsilon(1e-12));
    CHECK(c.pdf(9.0) == 0.0);
    CHECK(c.cdf(10.0) == 0.0);
    CHECK(c.cdf(98.0) >= 1.0 - 1e-6);
    CHECK(c.quantile(0.0) == 10.0);
    // median of the half-normal: mean + sigma * Phi^{-1}(0.75)
    CHECK(c.quantile(0.5) == doctest::Approx(17.419387252156902).epsilon(1e-10));
}

TEST_CASE("half-normal cdf agrees with quadrature of the density") {
    auto c = DemandCurve::truncated_gaussian(10.0, 11.0);
    for (double p : {10.5, 12.0, 15.0, 20.0, 31.0, 47.0}) {
        const double oracle = simpson_cdf(c, p);
        CHECK(c.cdf(p) == doctest::Approx(oracle).epsilon(1e-9));
        CHECK(c.survival(p) == doctest::Approx(1.0 - oracle).epsilon(1e-9));
    }
}

TEST_CASE("cdf is monotone on a 1e4-point grid") {
    auto curves = std::vector<DemandCurve>{
        DemandCurve::uniform(0.0, 1.0),
        DemandCurve::truncated_gaussian(10.0, 11.0),
        DemandCurve::truncated_gaussian(10.0, 16.0),
    };
    for (const auto& c : curves) {
        const auto sup = c.support();
        const double step = (sup.hi - sup.lo) / 1e4;
        double prev = c.cdf(sup.lo);
        CHECK(std::abs(prev) <= 1e-12);
        for (int i = 1; i <= 10000; ++i) {
            const double x = c.cdf(sup.lo + i * step);
            CHECK(x >= prev);
            prev = x;
        }
        CHECK(prev >= 1.0 - 1e-6);
    }
}

TEST_CASE("pdf matches centered finite difference of cdf") {
    auto curves = std::vector<DemandCurve>{
        DemandCurve::uniform(0.25, 1.25),
        DemandCurve::truncated_gaussian(10.0, 11.0),
    };
    for (const auto& c : curves) {
        const auto sup = c.support();
        const double width = sup.hi - sup.lo;
        const double h = width * 1e-6;
        for (int i = 1; i < 40; ++i) {
            const double p = sup.lo + width * i / 40.0;
            if (c.survival(p) <= 1e-9) continue;
            const double fd = (c.cdf(p + h) - c.cdf(p - h)) / (2.0 * h);
            if (fd < 1e-12) continue;
            CHECK(c.pdf(p) == doctest::Approx(fd).epsilon(1e-3));
        }
    }
}

TEST_CASE("hazard rate values and saturation error") {
    auto u = DemandCurve::uniform(0.0, 1.0);
    CHECK(hazard_rate(u, 0.0) == doctest::Approx(1.0));
    CHECK(hazard_rate(u, 0.5) == doctest::Approx(2.0));
    CHECK(hazard_rate(u, 0.9) == doctest::Approx(10.0));
    CHECK_THROWS_AS(hazard_rate(u, 1.0), std::domain_error);

    auto g = DemandCurve::truncated_gaussian(10.0, 11.0);
    CHECK_THROWS_AS(hazard_rate(g, 98.0), std::domain_error);
}

TEST_CASE("ihr validation accepts the built-in families") {
    auto u = validate_ihr(DemandCurve::uniform(0.0, 1.0));
    CHECK(u.is_ihr);
    CHECK(u.lipschitz_estimate == doctest::Approx(0.0).epsilon(1e-12));

    auto g = validate_ihr(DemandCurve::truncated_gaussian(10.0, 11.0));
    CHECK(g.is_ihr);
    CHECK(g.lipschitz_estimate == doctest::Approx(0.0039995).epsilon(0.05));

    // Hazard rate must be nondecreasing point by point where is_ihr is true.
    auto c = DemandCurve::truncated_gaussian(10.0, 11.0);
    double prev = hazard_rate(c, 10.0);
    for (int i = 1; i <= 2000; ++i) {
        const double p = 10.0 + i * (88.0 / 10000.0);
        const double h = hazard_rate(c, p);
        CHECK(h >= prev);
        prev = h;
    }
}

TEST_CASE("ihr validation flags a decreasing-hazard tabulated curve") {
    // Slope drops from 1.6 to 0.4 at p = 0.5: hazard falls from 8 to 2.
    auto c = DemandCurve::tabulated_from_knots({0.0, 0.5, 1.0}, {0.0, 0.8, 1.0});
    auto report = validate_ihr(c, 0.01);
    CHECK_FALSE(report.is_ihr);
}

TEST_CASE("optimal price closed forms for uniform supports") {
    auto p0 = optimal_price(DemandCurve::uniform(0.0, 1.0));
    CHECK(p0.b_star == doctest::Approx(0.5).epsilon(1e-7));
    CHECK(p0.q_star == doctest::Approx(0.5).epsilon(1e-7));
    CHECK(p0.profit_star == doctest::Approx(0.25).epsilon(1e-6));

    // Uniform on [w, w+1] has b* = (1 + w)/2 while w <= 1.
    auto p1 = optimal_price(DemandCurve::uniform(0.25, 1.25));
    CHECK(p1.b_star == doctest::Approx(0.625).epsilon(1e-7));

    // Once w > 1 the first-order condition has no root in the support.
    CHECK_THROWS_AS(optimal_price(DemandCurve::uniform(2.0, 3.0)), std::domain_error);
}

TEST_CASE("optimal price for the half-normal family") {
    struct Row {
        double sigma, b_star, q_star;
    };
    const Row rows[] = {
        {11.0, 11.996692105511, 0.855961426442},
        {13.5, 13.742610759366, 0.781603177824},
        {16.0, 15.531022407138, 0.729576526749},
    };
    double prev = 0.0;
    for (const auto& r : rows) {
        auto opt = optimal_price(DemandCurve::truncated_gaussian(10.0, r.sigma));
        CHECK(opt.b_star == doctest::Approx(r.b_star).epsilon(1e-6));
        CHECK(opt.q_star == doctest::Approx(r.q_star).epsilon(1e-6));
        CHECK(opt.b_star > prev);
        prev = opt.b_star;
    }
}

TEST_CASE("optimal price agrees with an independent dense-grid argmax") {
    auto c = DemandCurve::truncated_gaussian(10.0, 13.5);
    const double step = 1e-4;
    const double argmax = grid_argmax_revenue(c, 30.0, step);
    auto opt = optimal_price(c);
    CHECK(std::abs(opt.b_star - argmax) <= step);
}

TEST_CASE("sampling matches the distribution (Glivenko-Cantelli)") {
    auto curves = std::vector<DemandCurve>{
        DemandCurve::uniform(0.0, 1.0),
        DemandCurve::truncated_gaussian(10.0, 11.0),
    };
    int which = 0;
    for (const auto& c : curves) {
        RandomStream rng = RandomStream::derive(20240817, 7, which++);
        const int n = 100000;
        std::vector<double> xs(n);
        for (int i = 0; i < n; ++i) xs[i] = sample_valuation(c, rng);
        std::sort(xs.begin(), xs.end());
        double ks = 0.0;
        for (int i = 0; i < n; ++i) {
            const double fx = c.cdf(xs[i]);
            ks = std::max(ks, std::abs(fx - static_cast<double>(i) / n));
            ks = std::max(ks, std::abs(static_cast<double>(i + 1) / n - fx));
        }
        CHECK(ks <= 0.01);
    }
}

TEST_CASE("half-normal sample mean is near the analytic mean") {
    auto c = DemandCurve::truncated_gaussian(10.0, 11.0);
    RandomStream rng(99251);
    const int n = 100000;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += sample_valuation(c, rng);
    const double analytic = 18.77673016883152; // mean + sigma * sqrt(2/pi)
    CHECK(acc / n == doctest::Approx(analytic).epsilon(0.01));
}

TEST_CASE("sampling consumes exactly one uniform per draw") {
    auto c = DemandCurve::truncated_gaussian(10.0, 11.0);
    RandomStream a(42), b(42);
    for (int i = 0; i < 32; ++i) {
        const double direct = sample_valuation(c, a);
        const double manual = c.quantile(b.uniform01());
        CHECK(direct == manual);
    }
}

TEST_CASE("inverse normal cdf round-trips against erfc") {
    CHECK(inverse_normal_cdf(0.5) == 0.0);
    CHECK(inverse_normal_cdf(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
    for (double q : {1e-9, 1e-4, 0.1, 0.3, 0.7, 0.9, 0.9999, 1.0 - 1e-9}) {
        const double x = inverse_normal_cdf(q);
        const double back = 0.5 * std::erfc(-x / std::numbers::sqrt2);
        CHECK(back == doctest::Approx(q).epsilon(1e-12));
    }
}

TEST_CASE("tabulated curve from file round-trips") {
    const char* path = "tabulated_curve_test.txt";
    {
        std::FILE* f = std::fopen(path, "w");
        REQUIRE(f != nullptr);
        std::fputs("# price cdf\n", f);
        std::fputs("1.0 0.0\n1.5 0.25\n2.0 0.6\n3.0 1.0\n", f);
        std::fclose(f);
    }
    auto c = DemandCurve::tabulated(path);
    CHECK(c.support().lo == 1.0);
    CHECK(c.support().hi == 3.0);
    CHECK(c.cdf(1.5) == doctest::Approx(0.25));
    CHECK(c.cdf(1.75) == doctest::Approx(0.425));
    CHECK(c.pdf(1.2) == doctest::Approx(0.5));   // slope of the first segment
    CHECK(c.pdf(2.5) == doctest::Approx(0.4));   // slope of the last segment
    CHECK(c.quantile(0.25) == doctest::Approx(1.5));
    CHECK(c.quantile(0.425) == doctest::Approx(1.75));
    // quantile inverts cdf inside the support
    for (double p : {1.1, 1.5, 1.9, 2.4, 2.9}) {
        CHECK(c.quantile(c.cdf(p)) == doctest::Approx(p).epsilon(1e-12));
    }
    std::remove(path);
}

TEST_CASE("tabulated curve rejects malformed input") {
    CHECK_THROWS_AS(DemandCurve::tabulated("no_such_file.txt"), std::invalid_argument);
    CHECK_THROWS_AS(DemandCurve::tabulated_from_knots({0.0, 1.0}, {0.0, 0.5}),
                    std::invalid_argument); // cdf does not reach 1
    CHECK_THROWS_AS(DemandCurve::tabulated_from_knots({0.0, 1.0, 0.5}, {0.0, 0.5, 1.0}),
                    std::invalid_argument); // prices not increasing
    CHECK_THROWS_AS(DemandCurve::tabulated_from_knots({0.0, 0.5, 1.0}, {0.0, 0.5, 0.5}),
                    std::invalid_argument); // cdf not strictly increasing
    CHECK_THROWS_AS(DemandCurve::tabulated_from_knots({0.0, 1.0}, {0.1, 1.0}),
                    std::invalid_argument); // cdf does not start at 0

    const char* path = "tabulated_curve_bad.txt";
    {
        std::FILE* f = std::fopen(path, "w");
        REQUIRE(f != nullptr);
        std::fputs("1.0 0.0\nnot_a_number 0.5\n", f);
        std::fclose(f);
    }
    CHECK_THROWS_AS(DemandCurve::tabulated(path), std::invalid_argument);
    std::remove(path);
}

TEST_CASE("tabulated pdf matches finite difference inside segments") {
    auto c = DemandCurve::tabulated_from_knots({0.0, 0.4, 1.0}, {0.0, 0.5, 1.0});
    const double h = 1e-7;
    for (double p : {0.1, 0.2, 0.3, 0.5, 0.7, 0.9}) {
        const double fd = (c.cdf(p + h) - c.cdf(p - h)) / (2.0 * h);
        CHECK(c.pdf(p) == doctest::Approx(fd).epsilon(1e-3));
    }
}
