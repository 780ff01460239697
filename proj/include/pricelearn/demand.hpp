#pragma once

#include <string>
#include <vector>

#include "pricelearn/random.hpp"

namespace pricelearn {

struct SupportInterval {
    double lo;
    double hi;
};

struct IhrReport {
    bool is_ihr;               // hazard rate nondecreasing on the checked grid
    double lipschitz_estimate; // max |f(p) - f(p')| / |p - p'| over adjacent grid points
    double grid_step;          // step actually used
};

struct OptimalPoint {
    double b_star;      // revenue-maximizing posted price
    double q_star;      // sale probability 1 - F(b_star)
    double profit_star; // b_star * q_star
};

// Buyer valuation distribution. Three families:
//   - Uniform(lo, hi)
//   - TruncatedGaussian(mean, sigma): N(mean, sigma^2) truncated below at its
//     mean (half-normal). Grid operations cap the upper support at mean + 8*sigma,
//     where the cdf is 1 within 1e-15.
//   - Tabulated: piecewise-linear cdf through (price, cdf) knots from a
//     two-column text file, both columns strictly increasing.
class DemandCurve {
  public:
    enum class Family { Uniform, TruncatedGaussian, Tabulated };

    static DemandCurve uniform(double lo, double hi);
    static DemandCurve truncated_gaussian(double mean, double sigma);
    static DemandCurve tabulated(const std::string& path);
    static DemandCurve tabulated_from_knots(std::vector<double> prices,
                                            std::vector<double> cdf_values);

    Family family() const { return family_; }
    SupportInterval support() const { return support_; }

    double cdf(double price) const;
    double survival(double price) const; // 1 - cdf, stable in the upper tail
    double pdf(double price) const;
    double quantile(double u) const;     // inverse cdf, u in [0, 1)
    double pdf_sup() const;              // sup of the density over the support

  private:
    DemandCurve() = default;

    Family family_ = Family::Uniform;
    SupportInterval support_{0.0, 1.0};
    double par0_ = 0.0; // uniform: lo, half-normal: mean
    double par1_ = 1.0; // uniform: hi, half-normal: sigma
    std::vector<double> knot_price_;
    std::vector<double> knot_cdf_;
};

// f(p) / (1 - F(p)). Throws std::domain_error once F(p) >= 1 - 1e-12.
double hazard_rate(const DemandCurve& curve, double price);

// Scans the support on a uniform grid (default step = width / 10^4), skipping
// the saturated upper tail, and reports hazard monotonicity plus a finite-
// difference Lipschitz estimate for the density.
IhrReport validate_ihr(const DemandCurve& curve, double grid_step = 0.0);

// Root of (1 - F(b))/f(b) - b = 0 by bisection (interval tolerance `tol`),
// cross-checked against a dense-grid argmax of p * (1 - F(p)) at step 1e-4.
// Throws std::domain_error if the first-order condition has no sign change on
// the support or the two answers disagree beyond the grid resolution.
OptimalPoint optimal_price(const DemandCurve& curve, double tol = 1e-8);

// Inverse-cdf draw; consumes exactly one uniform from the stream.
double sample_valuation(const DemandCurve& curve, RandomStream& rng);

// Standard normal quantile (Acklam initial guess plus one Halley step).
double inverse_normal_cdf(double q);

} // namespace pricelearn
