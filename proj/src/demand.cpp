#include "pricelearn/demand.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace pricelearn {

namespace {

constexpr double kSaturation = 1e-12;      // survival below this counts as saturated
constexpr double kUpperTailSigmas = 8.0;   // half-normal support cap for grid work

double require_finite(double x, const char* what) {
    if (!std::isfinite(x)) throw std::invalid_argument(std::string(what) + " must be finite");
    return x;
}

} // namespace

DemandCurve DemandCurve::uniform(double lo, double hi) {
    require_finite(lo, "uniform lo");
    require_finite(hi, "uniform hi");
    if (!(lo < hi)) throw std::invalid_argument("uniform support needs lo < hi");
    if (lo < 0.0) throw std::invalid_argument("uniform support must be nonnegative");
    DemandCurve c;
    c.family_ = Family::Uniform;
    c.par0_ = lo;
    c.par1_ = hi;
    c.support_ = {lo, hi};
    return c;
}

DemandCurve DemandCurve::truncated_gaussian(double mean, double sigma) {
    require_finite(mean, "truncated_gaussian mean");
    require_finite(sigma, "truncated_gaussian sigma");
    if (!(sigma > 0.0)) throw std::invalid_argument("truncated_gaussian needs sigma > 0");
    if (mean < 0.0) throw std::invalid_argument("truncated_gaussian needs mean >= 0");
    DemandCurve c;
    c.family_ = Family::TruncatedGaussian;
    c.par0_ = mean;
    c.par1_ = sigma;
    c.support_ = {mean, mean + kUpperTailSigmas * sigma};
    return c;
}

DemandCurve DemandCurve::tabulated_from_knots(std::vector<double> prices,
                                              std::vector<double> cdf_values) {
    if (prices.size() != cdf_values.size())
        throw std::invalid_argument("tabulated curve: column lengths differ");
    if (prices.size() < 2)
        throw std::invalid_argument("tabulated curve: need at least two knots");
    for (std::size_t i = 0; i < prices.size(); ++i) {
        require_finite(prices[i], "tabulated price");
        require_finite(cdf_values[i], "tabulated cdf");
        if (i > 0 && !(prices[i] > prices[i - 1]))
            throw std::invalid_argument("tabulated curve: prices must be strictly increasing");
        if (i > 0 && !(cdf_values[i] > cdf_values[i - 1]))
            throw std::invalid_argument("tabulated curve: cdf must be strictly increasing");
    }
    if (prices.front() < 0.0)
        throw std::invalid_argument("tabulated curve: prices must be nonnegative");
    if (std::abs(cdf_values.front()) > 1e-12)
        throw std::invalid_argument("tabulated curve: cdf must start at 0");
    if (cdf_values.back() < 1.0 - 1e-6 || cdf_values.back() > 1.0 + 1e-12)
        throw std::invalid_argument("tabulated curve: cdf must end at 1 (within 1e-6)");
    cdf_values.back() = std::min(cdf_values.back(), 1.0);
    DemandCurve c;
    c.family_ = Family::Tabulated;
    c.support_ = {prices.front(), prices.back()};
    c.knot_price_ = std::move(prices);
    c.knot_cdf_ = std::move(cdf_values);
    return c;
}

DemandCurve DemandCurve::tabulated(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("tabulated curve: cannot open " + path);
    std::vector<double> prices, cdf_values;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream row(line);
        double p = 0.0, f = 0.0;
        if (!(row >> p >> f))
            throw std::invalid_argument("tabulated curve: malformed line " +
                                        std::to_string(lineno) + " in " + path);
        prices.push_back(p);
        cdf_values.push_back(f);
    }
    return tabulated_from_knots(std::move(prices), std::move(cdf_values));
}

double DemandCurve::cdf(double price) const {
    switch (family_) {
        case Family::Uniform: {
            if (price <= par0_) return 0.0;
            if (price >= par1_) return 1.0;
            return (price - par0_) / (par1_ - par0_);
        }
        case Family::TruncatedGaussian: {
            if (price <= par0_) return 0.0;
            if (price >= support_.hi) return 1.0;
            const double z = (price - par0_) / par1_;
            return std::erf(z / std::numbers::sqrt2);
        }
        case Family::Tabulated: {
            if (price <= knot_price_.front()) return 0.0;
            if (price >= knot_price_.back()) return 1.0;
            auto it = std::upper_bound(knot_price_.begin(), knot_price_.end(), price);
            std::size_t i = static_cast<std::size_t>(it - knot_price_.begin()) - 1;
            const double w = (price - knot_price_[i]) / (knot_price_[i + 1] - knot_price_[i]);
            return knot_cdf_[i] + w * (knot_cdf_[i + 1] - knot_cdf_[i]);
        }
    }
    return 0.0;
}

double DemandCurve::survival(double price) const {
    switch (family_) {
        case Family::Uniform: {
            if (price <= par0_) return 1.0;
            if (price >= par1_) return 0.0;
            return (par1_ - price) / (par1_ - par0_);
        }
        case Family::TruncatedGaussian: {
            if (price <= par0_) return 1.0;
            if (price >= support_.hi) return 0.0;
            const double z = (price - par0_) / par1_;
            return std::erfc(z / std::numbers::sqrt2);
        }
        case Family::Tabulated:
            return 1.0 - cdf(price);
    }
    return 0.0;
}

double DemandCurve::pdf(double price) const {
    switch (family_) {
        case Family::Uniform:
            return (price >= par0_ && price <= par1_) ? 1.0 / (par1_ - par0_) : 0.0;
        case Family::TruncatedGaussian: {
            if (price < par0_ || price > support_.hi) return 0.0;
            const double z = (price - par0_) / par1_;
            const double norm = 2.0 / (par1_ * std::sqrt(2.0 * std::numbers::pi));
            return norm * std::exp(-0.5 * z * z);
        }
        case Family::Tabulated: {
            if (price < knot_price_.front() || price > knot_price_.back()) return 0.0;
            auto it = std::upper_bound(knot_price_.begin(), knot_price_.end(), price);
            std::size_t i = (it == knot_price_.end())
                                ? knot_price_.size() - 2
                                : static_cast<std::size_t>(it - knot_price_.begin()) - 1;
            if (i + 1 >= knot_price_.size()) i = knot_price_.size() - 2;
            return (knot_cdf_[i + 1] - knot_cdf_[i]) / (knot_price_[i + 1] - knot_price_[i]);
        }
    }
    return 0.0;
}

double DemandCurve::quantile(double u) const {
    if (!(u >= 0.0) || u >= 1.0)
        throw std::invalid_argument("quantile needs u in [0, 1)");
    switch (family_) {
        case Family::Uniform:
            return par0_ + u * (par1_ - par0_);
        case Family::TruncatedGaussian:
            // F(v) = 2*Phi((v - mean)/sigma) - 1 on v >= mean.
            return par0_ + par1_ * inverse_normal_cdf(0.5 + 0.5 * u);
        case Family::Tabulated: {
            if (u <= knot_cdf_.front()) return knot_price_.front();
            if (u >= knot_cdf_.back()) return knot_price_.back();
            auto it = std::upper_bound(knot_cdf_.begin(), knot_cdf_.end(), u);
            std::size_t i = static_cast<std::size_t>(it - knot_cdf_.begin()) - 1;
            const double w = (u - knot_cdf_[i]) / (knot_cdf_[i + 1] - knot_cdf_[i]);
            return knot_price_[i] + w * (knot_price_[i + 1] - knot_price_[i]);
        }
    }
    return 0.0;
}

double DemandCurve::pdf_sup() const {
    switch (family_) {
        case Family::Uniform:
            return 1.0 / (par1_ - par0_);
        case Family::TruncatedGaussian:
            return 2.0 / (par1_ * std::sqrt(2.0 * std::numbers::pi));
        case Family::Tabulated: {
            double m = 0.0;
            for (std::size_t i = 0; i + 1 < knot_price_.size(); ++i)
                m = std::max(m, (knot_cdf_[i + 1] - knot_cdf_[i]) /
                                    (knot_price_[i + 1] - knot_price_[i]));
            return m;
        }
    }
    return 0.0;
}

double hazard_rate(const DemandCurve& curve, double price) {
    const double s = curve.survival(price);
    if (s <= kSaturation)
        throw std::domain_error("hazard_rate: cdf saturated (F >= 1 - 1e-12)");
    return curve.pdf(price) / s;
}

IhrReport validate_ihr(const DemandCurve& curve, double grid_step) {
    const SupportInterval sup = curve.support();
    const double width = sup.hi - sup.lo;
    if (grid_step == 0.0) grid_step = width / 1e4;
    if (!(grid_step > 0.0) || grid_step > width)
        throw std::invalid_argument("validate_ihr: grid_step must be in (0, width]");

    bool monotone = true;
    double lipschitz = 0.0;
    double prev_hazard = -std::numeric_limits<double>::infinity();
    double prev_pdf = 0.0;
    bool have_prev = false;
    std::int64_t kept = 0;
    const std::int64_t n = static_cast<std::int64_t>(std::floor(width / grid_step));
    for (std::int64_t i = 0; i <= n; ++i) {
        const double p = sup.lo + static_cast<double>(i) * grid_step;
        if (curve.survival(p) <= kSaturation) break;
        const double h = hazard_rate(curve, p);
        const double f = curve.pdf(p);
        if (have_prev) {
            if (h < prev_hazard) monotone = false;
            lipschitz = std::max(lipschitz, std::abs(f - prev_pdf) / grid_step);
        }
        prev_hazard = h;
        prev_pdf = f;
        have_prev = true;
        ++kept;
    }
    if (kept < 2)
        throw std::invalid_argument("validate_ihr: grid too coarse for this support");
    return IhrReport{monotone, lipschitz, grid_step};
}

OptimalPoint optimal_price(const DemandCurve& curve, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("optimal_price: tol must be positive");
    const SupportInterval sup = curve.support();

    // Shrink the search interval to where the hazard is still defined.
    double hi_eff = sup.hi;
    if (curve.survival(hi_eff) <= kSaturation) {
        double a = sup.lo, b = hi_eff;
        for (int i = 0; i < 200 && (b - a) > tol; ++i) {
            const double m = 0.5 * (a + b);
            (curve.survival(m) > kSaturation ? a : b) = m;
        }
        hi_eff = a;
    }

    const auto foc = [&](double p) { return curve.survival(p) / curve.pdf(p) - p; };

    // Bracket the root on a coarse scan, then bisect.
    const int kScan = 512;
    const double scan_step = (hi_eff - sup.lo) / kScan;
    double lo_x = sup.lo;
    double lo_g = foc(lo_x);
    double root = std::numeric_limits<double>::quiet_NaN();
    if (lo_g <= 0.0) {
        if (std::abs(lo_g) <= tol) {
            root = sup.lo;
        } else {
            throw std::domain_error(
                "optimal_price: first-order condition already negative at the support edge");
        }
    } else {
        bool bracketed = false;
        for (int i = 1; i <= kScan; ++i) {
            const double x = sup.lo + i * scan_step;
            const double g = foc(x);
            if (g <= 0.0) {
                double a = lo_x, b = x;
                for (int it = 0; it < 200 && (b - a) > tol; ++it) {
                    const double m = 0.5 * (a + b);
                    (foc(m) > 0.0 ? a : b) = m;
                }
                root = 0.5 * (a + b);
                bracketed = true;
                break;
            }
            lo_x = x;
        }
        if (!bracketed)
            throw std::domain_error(
                "optimal_price: no sign change of the first-order condition on the support");
    }

    // Independent check: dense grid argmax of the revenue p * (1 - F(p)).
    const double span = hi_eff - sup.lo;
    double step = 1e-4;
    const double max_points = 2e6;
    if (span / step > max_points) step = span / max_points;
    double best_p = sup.lo, best_rev = sup.lo * curve.survival(sup.lo);
    const std::int64_t npts = static_cast<std::int64_t>(std::floor(span / step));
    for (std::int64_t i = 1; i <= npts; ++i) {
        const double p = sup.lo + static_cast<double>(i) * step;
        const double rev = p * curve.survival(p);
        if (rev > best_rev) {
            best_rev = rev;
            best_p = p;
        }
    }
    if (std::abs(best_p - root) > 1.5 * step + tol)
        throw std::domain_error(
            "optimal_price: bisection root disagrees with the dense-grid revenue argmax");

    const double q = curve.survival(root);
    return OptimalPoint{root, q, root * q};
}

double sample_valuation(const DemandCurve& curve, RandomStream& rng) {
    return curve.quantile(rng.uniform01());
}

double inverse_normal_cdf(double q) {
    if (!(q > 0.0) || !(q < 1.0))
        throw std::invalid_argument("inverse_normal_cdf needs q in (0, 1)");

    // Acklam's rational approximation.
    static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                -2.759285104469687e+02, 1.383577518672690e+02,
                                -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                -1.556989798598866e+02, 6.680131188771972e+01,
                                -1.328068155288572e+01};
    static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                -2.400758277161838e+00, -2.549732539343734e+00,
                                4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;

    double x;
    if (q < plow) {
        const double r = std::sqrt(-2.0 * std::log(q));
        x = (((((c[0] * r + c[1]) * r + c[2]) * r + c[3]) * r + c[4]) * r + c[5]) /
            ((((d[0] * r + d[1]) * r + d[2]) * r + d[3]) * r + 1.0);
    } else if (q > 1.0 - plow) {
        const double r = std::sqrt(-2.0 * std::log(1.0 - q));
        x = -(((((c[0] * r + c[1]) * r + c[2]) * r + c[3]) * r + c[4]) * r + c[5]) /
            ((((d[0] * r + d[1]) * r + d[2]) * r + d[3]) * r + 1.0);
    } else {
        const double r = q - 0.5;
        const double t = r * r;
        x = (((((a[0] * t + a[1]) * t + a[2]) * t + a[3]) * t + a[4]) * t + a[5]) * r /
            (((((b[0] * t + b[1]) * t + b[2]) * t + b[3]) * t + b[4]) * t + 1.0);
    }

    // One Halley step against the exact normal cdf (erfc form is tail-stable).
    const double sqrt2pi = std::sqrt(2.0 * std::numbers::pi);
    const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - q;
    const double u = e * sqrt2pi * std::exp(0.5 * x * x);
    x = x - u / (1.0 + 0.5 * x * u);
    return x;
}

} // namespace pricelearn
