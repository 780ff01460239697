#include "pricelearn/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "pricelearn/parallel.hpp"
#include "pricelearn/random.hpp"

namespace pricelearn {

namespace {

using njson = nlohmann::ordered_json;

[[noreturn]] void config_fail(const std::string& message) {
    throw ConfigError("config: " + message);
}

void require_keys(const njson& obj, const char* where,
                  std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* key : allowed) {
            if (it.key() == key) {
                known = true;
                break;
            }
        }
        if (!known) config_fail("unknown key '" + it.key() + "' in " + where);
    }
}

std::int64_t to_int64(const njson& j, const char* what) {
    if (j.is_number_integer() || j.is_number_unsigned()) return j.get<std::int64_t>();
    if (j.is_number_float()) {
        const double v = j.get<double>();
        if (std::floor(v) == v && std::abs(v) < 9.0e18) return static_cast<std::int64_t>(v);
    }
    config_fail(std::string(what) + " must be an integer");
}

double to_double(const njson& j, const char* what) {
    if (!j.is_number()) config_fail(std::string(what) + " must be a number");
    return j.get<double>();
}

std::string to_string_field(const njson& j, const char* what) {
    if (!j.is_string()) config_fail(std::string(what) + " must be a string");
    return j.get<std::string>();
}

void validate_config(const SweepConfig& cfg) {
    const auto& fam = cfg.family;
    switch (fam.kind) {
        case FamilyConfig::Kind::Uniform:
            if (!(std::isfinite(fam.lo) && std::isfinite(fam.hi)) || !(fam.lo < fam.hi) ||
                fam.lo < 0.0) {
                config_fail("uniform family needs 0 <= lo < hi");
            }
            break;
        case FamilyConfig::Kind::TruncatedGaussian:
            if (!(fam.mean >= 0.0) || !(fam.sigma_lo > 0.0) || !(fam.sigma_lo <= fam.sigma_hi)) {
                config_fail("truncated gaussian family needs mean >= 0 and 0 < sigma_lo <= sigma_hi");
            }
            if (fam.sigma_count < 1) config_fail("sigma_count must be at least 1");
            if (fam.sigma_count == 1 && fam.sigma_lo != fam.sigma_hi) {
                config_fail("sigma_count 1 needs sigma_lo == sigma_hi");
            }
            break;
        case FamilyConfig::Kind::Tabulated:
            if (fam.path.empty()) config_fail("tabulated family needs a path");
            break;
    }
    if (cfg.horizon < 1) config_fail("horizon must be at least 1");
    if (cfg.n_buyers < 1) config_fail("n_buyers must be at least 1");
    if (cfg.replications < 1) config_fail("replications must be at least 1");
    if (!(cfg.bin_width > 0.0) || !std::isfinite(cfg.bin_width)) {
        config_fail("bin_width must be positive");
    }
    const auto& lin = cfg.linear;
    if (!(lin.gain > 0.0) || !(lin.gain <= lin.gain_ceiling)) {
        config_fail("gain must satisfy 0 < gain <= gain_ceiling");
    }
    if (!(lin.epsilon >= 0.0)) config_fail("epsilon must be nonnegative");
    if (!(lin.q_min > 0.0) || !(lin.q_min < 1.0)) config_fail("q_min must lie in (0, 1)");
    if (!(lin.box_inflate >= 1.0)) config_fail("box_inflate must be at least 1");
    if (lin.initial_beliefs) {
        const auto& b = *lin.initial_beliefs;
        if (!(std::isfinite(b.beta0) && std::isfinite(b.beta1)) || !(b.beta0 > 0.0) ||
            !(b.beta1 < 0.0)) {
            config_fail("initial_beliefs must be finite with beta0 > 0 > beta1");
        }
    }
    const auto& reports = cfg.baseline.reports_per_period;
    for (std::size_t i = 0; i < reports.size(); ++i) {
        if (reports[i] < 1) config_fail("reports_per_period entries must be at least 1");
        if (i > 0 && reports[i] <= reports[i - 1]) {
            config_fail("reports_per_period must be strictly increasing");
        }
    }
    if (!(cfg.baseline.grid_resolution_rel > 0.0) || !(cfg.baseline.grid_resolution_rel < 1.0)) {
        config_fail("grid_resolution_rel must lie in (0, 1)");
    }
    for (const auto& [name, band] : cfg.checks) {
        if (name.empty()) config_fail("check names must be nonempty");
        if (!(band[0] <= band[1])) config_fail("check '" + name + "' has lo > hi");
    }
}

njson config_json(const SweepConfig& cfg) {
    njson fam;
    switch (cfg.family.kind) {
        case FamilyConfig::Kind::Uniform:
            fam = {{"kind", "uniform"}, {"lo", cfg.family.lo}, {"hi", cfg.family.hi}};
            break;
        case FamilyConfig::Kind::TruncatedGaussian:
            fam = {{"kind", "truncated_gaussian"},
                   {"mean", cfg.family.mean},
                   {"sigma_lo", cfg.family.sigma_lo},
                   {"sigma_hi", cfg.family.sigma_hi},
                   {"sigma_count", cfg.family.sigma_count}};
            break;
        case FamilyConfig::Kind::Tabulated:
            fam = {{"kind", "tabulated"}, {"path", cfg.family.path}};
            break;
    }
    njson lin = {{"gain", cfg.linear.gain},
                 {"gain_ceiling", cfg.linear.gain_ceiling},
                 {"epsilon", cfg.linear.epsilon},
                 {"perturbation", cfg.linear.perturbation == PerturbationSpec::Kind::UniformInterval
                                      ? "uniform"
                                      : "binary"},
                 {"q_min", cfg.linear.q_min},
                 {"box_inflate", cfg.linear.box_inflate}};
    if (cfg.linear.initial_beliefs) {
        lin["initial_beliefs"] = {cfg.linear.initial_beliefs->beta0,
                                  cfg.linear.initial_beliefs->beta1};
    }
    njson checks = njson::object();
    for (const auto& [name, band] : cfg.checks) {
        checks[name] = {band[0], band[1]};
    }
    return njson{{"family", fam},
                 {"horizon", cfg.horizon},
                 {"n_buyers", cfg.n_buyers},
                 {"seed", cfg.seed},
                 {"replications", cfg.replications},
                 {"bin_width", cfg.bin_width},
                 {"linear", lin},
                 {"baseline",
                  njson{{"reports_per_period", cfg.baseline.reports_per_period},
                        {"grid_resolution_rel", cfg.baseline.grid_resolution_rel}}},
                 {"checks", checks}};
}

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("failed while writing " + path);
}

njson stats_json(const ErrorStats& s) {
    return njson{{"n", s.n}, {"mean", s.mean}, {"variance", s.variance}};
}

std::string histogram_csv(const ErrorStats& stats) {
    std::string text = "center,count\n";
    for (const auto& bin : stats.histogram) {
        text += g17(bin.center);
        text += ',';
        text += std::to_string(bin.count);
        text += '\n';
    }
    return text;
}

struct LineFit {
    double slope;
    double intercept;
};

LineFit fit_line_xy(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0)) return LineFit{0.0, my};
    return LineFit{sxy / sxx, my - (sxy / sxx) * mx};
}

// log of the binomial cdf P[X <= k] at success probability p.
double log_binomial_cdf(std::int64_t k, std::int64_t n, double p) {
    const double logp = std::log(p);
    const double log1mp = std::log1p(-p);
    double max_term = -std::numeric_limits<double>::infinity();
    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(k) + 1);
    for (std::int64_t i = 0; i <= k; ++i) {
        const double lc = std::lgamma(static_cast<double>(n) + 1.0) -
                          std::lgamma(static_cast<double>(i) + 1.0) -
                          std::lgamma(static_cast<double>(n - i) + 1.0);
        const double term = lc + static_cast<double>(i) * logp +
                            static_cast<double>(n - i) * log1mp;
        terms.push_back(term);
        max_term = std::max(max_term, term);
    }
    double acc = 0.0;
    for (const double t : terms) acc += std::exp(t - max_term);
    return max_term + std::log(acc);
}

} // namespace

int FamilyConfig::point_count() const {
    return kind == Kind::TruncatedGaussian ? sigma_count : 1;
}

double FamilyConfig::param_at(int index) const {
    if (index < 0 || index >= point_count()) {
        throw std::out_of_range("family point index out of range");
    }
    if (kind != Kind::TruncatedGaussian) return 0.0;
    if (sigma_count == 1) return sigma_lo;
    return sigma_lo + (sigma_hi - sigma_lo) * static_cast<double>(index) /
                          static_cast<double>(sigma_count - 1);
}

DemandCurve FamilyConfig::curve_at(int index) const {
    switch (kind) {
        case Kind::Uniform:
            return DemandCurve::uniform(lo, hi);
        case Kind::TruncatedGaussian:
            return DemandCurve::truncated_gaussian(mean, param_at(index));
        case Kind::Tabulated:
            return DemandCurve::tabulated(path);
    }
    throw std::logic_error("unreachable family kind");
}

SweepConfig parse_config(const std::string& json_text) {
    njson j;
    try {
        j = njson::parse(json_text);
    } catch (const std::exception& e) {
        config_fail(e.what());
    }
    if (!j.is_object()) config_fail("top level must be an object");
    require_keys(j, "the top level",
                 {"family", "horizon", "n_buyers", "seed", "replications", "bin_width", "linear",
                  "baseline", "checks"});

    SweepConfig cfg;
    try {
        if (j.contains("family")) {
            const auto& f = j["family"];
            if (!f.is_object()) config_fail("family must be an object");
            const std::string kind = to_string_field(f.value("kind", njson("uniform")), "family.kind");
            if (kind == "uniform") {
                cfg.family.kind = FamilyConfig::Kind::Uniform;
                require_keys(f, "family", {"kind", "lo", "hi"});
                if (f.contains("lo")) cfg.family.lo = to_double(f["lo"], "family.lo");
                if (f.contains("hi")) cfg.family.hi = to_double(f["hi"], "family.hi");
            } else if (kind == "truncated_gaussian") {
                cfg.family.kind = FamilyConfig::Kind::TruncatedGaussian;
                require_keys(f, "family", {"kind", "mean", "sigma_lo", "sigma_hi", "sigma_count"});
                if (f.contains("mean")) cfg.family.mean = to_double(f["mean"], "family.mean");
                if (f.contains("sigma_lo")) {
                    cfg.family.sigma_lo = to_double(f["sigma_lo"], "family.sigma_lo");
                }
                if (f.contains("sigma_hi")) {
                    cfg.family.sigma_hi = to_double(f["sigma_hi"], "family.sigma_hi");
                }
                if (f.contains("sigma_count")) {
                    cfg.family.sigma_count =
                        static_cast<int>(to_int64(f["sigma_count"], "family.sigma_count"));
                }
            } else if (kind == "tabulated") {
                cfg.family.kind = FamilyConfig::Kind::Tabulated;
                require_keys(f, "family", {"kind", "path"});
                if (f.contains("path")) cfg.family.path = to_string_field(f["path"], "family.path");
            } else {
                config_fail("family.kind must be uniform, truncated_gaussian, or tabulated");
            }
        }
        if (j.contains("horizon")) cfg.horizon = to_int64(j["horizon"], "horizon");
        if (j.contains("n_buyers")) {
            cfg.n_buyers = static_cast<int>(to_int64(j["n_buyers"], "n_buyers"));
        }
        if (j.contains("seed")) {
            const auto& s = j["seed"];
            if (s.is_number_unsigned()) {
                cfg.seed = s.get<std::uint64_t>();
            } else {
                const std::int64_t v = to_int64(s, "seed");
                if (v < 0) config_fail("seed must be nonnegative");
                cfg.seed = static_cast<std::uint64_t>(v);
            }
        }
        if (j.contains("replications")) {
            cfg.replications = static_cast<int>(to_int64(j["replications"], "replications"));
        }
        if (j.contains("bin_width")) cfg.bin_width = to_double(j["bin_width"], "bin_width");
        if (j.contains("linear")) {
            const auto& l = j["linear"];
            if (!l.is_object()) config_fail("linear must be an object");
            require_keys(l, "linear",
                         {"gain", "gain_ceiling", "epsilon", "perturbation", "q_min",
                          "box_inflate", "initial_beliefs"});
            if (l.contains("gain")) cfg.linear.gain = to_double(l["gain"], "linear.gain");
            if (l.contains("gain_ceiling")) {
                cfg.linear.gain_ceiling = to_double(l["gain_ceiling"], "linear.gain_ceiling");
            }
            if (l.contains("epsilon")) {
                cfg.linear.epsilon = to_double(l["epsilon"], "linear.epsilon");
            }
            if (l.contains("perturbation")) {
                const std::string kind = to_string_field(l["perturbation"], "linear.perturbation");
                if (kind == "uniform") {
                    cfg.linear.perturbation = PerturbationSpec::Kind::UniformInterval;
                } else if (kind == "binary") {
                    cfg.linear.perturbation = PerturbationSpec::Kind::BinaryPoints;
                } else {
                    config_fail("linear.perturbation must be uniform or binary");
                }
            }
            if (l.contains("q_min")) cfg.linear.q_min = to_double(l["q_min"], "linear.q_min");
            if (l.contains("box_inflate")) {
                cfg.linear.box_inflate = to_double(l["box_inflate"], "linear.box_inflate");
            }
            if (l.contains("initial_beliefs")) {
                const auto& b = l["initial_beliefs"];
                if (!b.is_array() || b.size() != 2) {
                    config_fail("linear.initial_beliefs must be [beta0, beta1]");
                }
                cfg.linear.initial_beliefs =
                    LinearBeliefs{to_double(b[0], "initial_beliefs[0]"),
                                  to_double(b[1], "initial_beliefs[1]")};
            }
        }
        if (j.contains("baseline")) {
            const auto& b = j["baseline"];
            if (!b.is_object()) config_fail("baseline must be an object");
            require_keys(b, "baseline", {"reports_per_period", "grid_resolution_rel"});
            if (b.contains("reports_per_period")) {
                const auto& arr = b["reports_per_period"];
                if (!arr.is_array()) config_fail("baseline.reports_per_period must be an array");
                cfg.baseline.reports_per_period.clear();
                for (const auto& v : arr) {
                    cfg.baseline.reports_per_period.push_back(
                        static_cast<int>(to_int64(v, "reports_per_period entry")));
                }
            }
            if (b.contains("grid_resolution_rel")) {
                cfg.baseline.grid_resolution_rel =
                    to_double(b["grid_resolution_rel"], "baseline.grid_resolution_rel");
            }
        }
        if (j.contains("checks")) {
            const auto& c = j["checks"];
            if (!c.is_object()) config_fail("checks must be an object");
            for (auto it = c.begin(); it != c.end(); ++it) {
                const auto& band = it.value();
                if (!band.is_array() || band.size() != 2) {
                    config_fail("check '" + it.key() + "' must be [lo, hi]");
                }
                cfg.checks[it.key()] = {to_double(band[0], "check lo"),
                                        to_double(band[1], "check hi")};
            }
        }
    } catch (const njson::exception& e) {
        config_fail(e.what());
    }

    validate_config(cfg);
    return cfg;
}

SweepConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

std::string config_to_json(const SweepConfig& config) {
    validate_config(config);
    return config_json(config).dump(2) + "\n";
}

SweepResult run_sweep(const SweepConfig& config, int workers) {
    validate_config(config);
    const int points = config.family.point_count();
    const int reps = config.replications;
    const auto jobs = static_cast<std::size_t>(points) * static_cast<std::size_t>(reps);

    SweepResult result;
    result.config = config;
    result.points.resize(jobs);

    parallel_for_ordered(jobs, workers, [&](std::size_t idx) {
        const int p = static_cast<int>(idx / static_cast<std::size_t>(reps));
        const int r = static_cast<int>(idx % static_cast<std::size_t>(reps));
        const DemandCurve curve = config.family.curve_at(p);
        const auto opt = optimal_price(curve);

        SweepPointResult out;
        out.sigma = config.family.param_at(p);
        out.b_star = opt.b_star;
        out.q_star = opt.q_star;

        {
            const auto box =
                BeliefBox::for_curve(curve, config.linear.q_min, config.linear.box_inflate);
            EpisodeConfig ec;
            ec.schedule = GainSchedule::constant(config.linear.gain, config.linear.gain_ceiling);
            ec.perturbation = config.linear.perturbation_spec();
            ec.n_buyers = config.n_buyers;
            ec.horizon = config.horizon;
            ec.initial_beliefs = config.linear.initial_beliefs;
            RandomStream rng = RandomStream::derive(config.seed, p, 0, r);
            const auto episode = run_episode(curve, ec, box, rng);
            out.lin_err_price = episode.final_forecast.price - opt.b_star;
            out.lin_err_qty = episode.final_forecast.quantity - opt.q_star;
            out.lin_projections = episode.projection_count;
        }

        const auto support = curve.support();
        const double grid_res = config.baseline.grid_resolution_rel * (support.hi - support.lo);
        for (std::size_t k = 0; k < config.baseline.reports_per_period.size(); ++k) {
            RandomStream rng = RandomStream::derive(config.seed, p, 1 + k, r);
            const auto cr = run_cr_episode(curve, config.baseline.reports_per_period[k],
                                           config.horizon, grid_res, rng);
            out.cr_err_price.push_back(cr.price_forecast - opt.b_star);
            out.cr_sup_dist.push_back(cr.sup_distance);
        }
        result.points[idx] = std::move(out);
    });
    return result;
}

ErrorStats summarize(const std::vector<double>& errors, double bin_width) {
    if (!(bin_width > 0.0) || !std::isfinite(bin_width)) {
        throw std::invalid_argument("bin_width must be positive");
    }
    ErrorStats stats;
    stats.bin_width = bin_width;
    stats.n = static_cast<std::int64_t>(errors.size());
    if (errors.empty()) return stats;

    double acc = 0.0;
    for (const double e : errors) acc += e;
    stats.mean = acc / static_cast<double>(errors.size());
    double ss = 0.0;
    for (const double e : errors) ss += (e - stats.mean) * (e - stats.mean);
    stats.variance = ss / static_cast<double>(errors.size());

    std::map<std::int64_t, std::int64_t> bins;
    for (const double e : errors) {
        ++bins[static_cast<std::int64_t>(std::llround(e / bin_width))];
    }
    for (const auto& [k, count] : bins) {
        stats.histogram.push_back(HistogramBin{static_cast<double>(k) * bin_width, count});
    }
    return stats;
}

SweepSummary summarize_sweep(const SweepResult& result) {
    const auto& cfg = result.config;
    SweepSummary summary;
    std::vector<double> lin_price, lin_qty;
    std::vector<std::vector<double>> cr(cfg.baseline.reports_per_period.size());
    std::vector<double> sup_acc(cfg.baseline.reports_per_period.size(), 0.0);
    for (const auto& point : result.points) {
        lin_price.push_back(point.lin_err_price);
        lin_qty.push_back(point.lin_err_qty);
        summary.projections_total += point.lin_projections;
        for (std::size_t k = 0; k < cr.size(); ++k) {
            cr[k].push_back(point.cr_err_price[k]);
            sup_acc[k] += point.cr_sup_dist[k];
        }
    }
    summary.linear_price = summarize(lin_price, cfg.bin_width);
    summary.linear_quantity = summarize(lin_qty, cfg.bin_width);
    for (std::size_t k = 0; k < cr.size(); ++k) {
        const int K = cfg.baseline.reports_per_period[k];
        summary.cr_price[K] = summarize(cr[k], cfg.bin_width);
        summary.cr_sup_mean[K] =
            result.points.empty() ? 0.0 : sup_acc[k] / static_cast<double>(result.points.size());
    }
    return summary;
}

namespace {

bool parse_k_suffix(const std::string& name, const std::string& prefix, int& k_out) {
    if (name.size() <= prefix.size() || name.compare(0, prefix.size(), prefix) != 0) return false;
    const std::string digits = name.substr(prefix.size());
    for (const char c : digits) {
        if (c < '0' || c > '9') return false;
    }
    k_out = std::stoi(digits);
    return true;
}

double metric_value(const std::string& name, const SweepSummary& summary) {
    if (name == "linear_mean") return summary.linear_price.mean;
    if (name == "linear_variance") return summary.linear_price.variance;
    if (name == "linear_quantity_mean") return summary.linear_quantity.mean;
    if (name == "linear_quantity_variance") return summary.linear_quantity.variance;
    if (name == "projections_total") return static_cast<double>(summary.projections_total);
    int k = 0;
    if (parse_k_suffix(name, "cr_mean_k", k)) return summary.cr_price.at(k).mean;
    if (parse_k_suffix(name, "cr_variance_k", k)) return summary.cr_price.at(k).variance;
    if (parse_k_suffix(name, "cr_sup_mean_k", k)) return summary.cr_sup_mean.at(k);
    if (parse_k_suffix(name, "cr_to_linear_variance_ratio_k", k)) {
        return summary.cr_price.at(k).variance / summary.linear_price.variance;
    }
    throw ConfigError("config: unknown check metric '" + name + "'");
}

} // namespace

std::vector<CheckOutcome> evaluate_checks(const SweepResult& result,
                                          const SweepSummary& summary) {
    std::vector<CheckOutcome> outcomes;
    for (const auto& [name, band] : result.config.checks) {
        double value;
        try {
            value = metric_value(name, summary);
        } catch (const std::out_of_range&) {
            throw ConfigError("config: check '" + name +
                              "' references a K absent from reports_per_period");
        }
        outcomes.push_back(
            CheckOutcome{name, value, band[0], band[1],
                         value >= band[0] && value <= band[1]});
    }
    return outcomes;
}

double binomial_upper_bound(std::int64_t failures, std::int64_t trials, double alpha) {
    if (trials < 1 || failures < 0 || failures > trials) {
        throw std::invalid_argument("binomial bound needs 0 <= failures <= trials");
    }
    if (!(alpha > 0.0) || !(alpha < 1.0)) {
        throw std::invalid_argument("alpha must lie in (0, 1)");
    }
    if (failures == trials) return 1.0;
    const double log_alpha = std::log(alpha);
    double lo = static_cast<double>(failures) / static_cast<double>(trials);
    double hi = 1.0 - 1e-16;
    if (log_binomial_cdf(failures, trials, std::max(lo, 1e-300)) < log_alpha) {
        return lo; // already below alpha at the point estimate (cannot happen for alpha < 0.5)
    }
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (log_binomial_cdf(failures, trials, mid) > log_alpha) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

PacCertificate pac_certify(const DemandCurve& curve, const LinearRunConfig& linear, int n_buyers,
                           double mu, double lambda, int n_trials, double tau_mu,
                           std::uint64_t master_seed, int workers,
                           std::optional<LinearBeliefs> initial) {
    if (!(mu > 0.0)) throw std::invalid_argument("mu must be positive");
    if (!(lambda > 0.0) || !(lambda < 1.0)) throw std::invalid_argument("lambda must lie in (0, 1)");
    if (n_trials < 1) throw std::invalid_argument("need at least one trial");
    if (n_buyers < 1) throw std::invalid_argument("need at least one buyer");

    const std::int64_t T = stop_time(mu, linear.gain, tau_mu);
    std::vector<std::int64_t> checkpoints;
    for (const std::int64_t t : {T / 4, T / 2, T}) {
        const std::int64_t clamped = std::max<std::int64_t>(1, t);
        if (checkpoints.empty() || clamped > checkpoints.back()) checkpoints.push_back(clamped);
    }

    const auto opt = optimal_price(curve);
    const auto box = BeliefBox::for_curve(curve, linear.q_min, linear.box_inflate);

    EpisodeConfig ec;
    ec.schedule = GainSchedule::constant(linear.gain, linear.gain_ceiling);
    ec.perturbation = linear.perturbation_spec();
    ec.n_buyers = n_buyers;
    ec.horizon = T;
    ec.snapshot_periods = checkpoints;
    ec.initial_beliefs = initial ? initial : linear.initial_beliefs;

    std::vector<std::vector<std::uint8_t>> fail(checkpoints.size(),
                                                std::vector<std::uint8_t>(n_trials, 0));
    parallel_for_ordered(static_cast<std::size_t>(n_trials), workers, [&](std::size_t trial) {
        RandomStream rng = RandomStream::derive(master_seed, trial);
        const auto episode = run_episode(curve, ec, box, rng);
        for (std::size_t s = 0; s < episode.snapshots.size(); ++s) {
            const double b = implied_price(episode.snapshots[s].second);
            fail[s][trial] = std::abs(b - opt.b_star) > 4.0 * mu ? 1 : 0;
        }
    });

    PacCertificate cert;
    cert.mu = mu;
    cert.lambda = lambda;
    cert.t_used = T;
    cert.n_trials = n_trials;
    std::vector<double> xs, ys;
    for (std::size_t s = 0; s < checkpoints.size(); ++s) {
        std::int64_t count = 0;
        for (const auto f : fail[s]) count += f;
        const double rate = static_cast<double>(count) / static_cast<double>(n_trials);
        cert.checkpoints.push_back(PacCheckpoint{checkpoints[s], count, rate});
        xs.push_back(static_cast<double>(checkpoints[s]));
        ys.push_back(std::log(rate + 1.0 / static_cast<double>(n_trials)));
    }
    cert.failures = cert.checkpoints.back().failures;
    cert.failure_rate = cert.checkpoints.back().rate;
    cert.failure_rate_upper = binomial_upper_bound(cert.failures, n_trials);
    cert.passed = cert.failure_rate_upper <= lambda;
    cert.rho_hat = checkpoints.size() >= 2 ? -fit_line_xy(xs, ys).slope : 0.0;
    return cert;
}

void emit_results(const SweepResult& result, const SweepSummary& summary,
                  const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const auto& cfg = result.config;
    const auto& ks = cfg.baseline.reports_per_period;
    const int reps = cfg.replications;

    std::string csv = "point,replication,sigma,b_star,q_star,lin_err_price,lin_err_qty,"
                      "lin_projections";
    for (const int K : ks) {
        csv += ",cr_err_price_k" + std::to_string(K) + ",cr_sup_k" + std::to_string(K);
    }
    csv += '\n';
    for (std::size_t idx = 0; idx < result.points.size(); ++idx) {
        const auto& pt = result.points[idx];
        const auto p = idx / static_cast<std::size_t>(reps);
        const auto r = idx % static_cast<std::size_t>(reps);
        csv += std::to_string(p);
        csv += ',';
        csv += std::to_string(r);
        csv += ',';
        csv += g17(pt.sigma);
        csv += ',';
        csv += g17(pt.b_star);
        csv += ',';
        csv += g17(pt.q_star);
        csv += ',';
        csv += g17(pt.lin_err_price);
        csv += ',';
        csv += g17(pt.lin_err_qty);
        csv += ',';
        csv += std::to_string(pt.lin_projections);
        for (std::size_t k = 0; k < ks.size(); ++k) {
            csv += ',';
            csv += g17(pt.cr_err_price[k]);
            csv += ',';
            csv += g17(pt.cr_sup_dist[k]);
        }
        csv += '\n';
    }
    write_text(out_dir + "/sweep.csv", csv);

    njson cr_stats = njson::object();
    njson cr_sup = njson::object();
    for (const auto& [K, stats] : summary.cr_price) {
        cr_stats["k" + std::to_string(K)] = stats_json(stats);
    }
    for (const auto& [K, v] : summary.cr_sup_mean) {
        cr_sup["k" + std::to_string(K)] = v;
    }
    njson j{{"linear_price", stats_json(summary.linear_price)},
            {"linear_quantity", stats_json(summary.linear_quantity)},
            {"cr_price", cr_stats},
            {"cr_sup_mean", cr_sup},
            {"projections_total", summary.projections_total},
            {"config", config_json(cfg)}};
    write_text(out_dir + "/summary.json", j.dump(2) + "\n");

    write_text(out_dir + "/histogram_linear.csv", histogram_csv(summary.linear_price));
    for (const auto& [K, stats] : summary.cr_price) {
        write_text(out_dir + "/histogram_cr_k" + std::to_string(K) + ".csv",
                   histogram_csv(stats));
    }
}

void write_pac_json(const PacCertificate& cert, const std::string& path) {
    njson cps = njson::array();
    for (const auto& cp : cert.checkpoints) {
        cps.push_back(njson{{"t", cp.t}, {"failures", cp.failures}, {"rate", cp.rate}});
    }
    njson j{{"mu", cert.mu},
            {"lambda", cert.lambda},
            {"t_used", cert.t_used},
            {"n_trials", cert.n_trials},
            {"failures", cert.failures},
            {"failure_rate", cert.failure_rate},
            {"failure_rate_upper", cert.failure_rate_upper},
            {"passed", cert.passed},
            {"rho_hat", cert.rho_hat},
            {"checkpoints", cps}};
    write_text(path, j.dump(2) + "\n");
}

void write_trajectory_csv(const OdeTrajectory& trajectory, const std::string& path) {
    std::string csv = "tau,beta0,beta1,b\n";
    for (std::size_t k = 0; k < trajectory.tau.size(); ++k) {
        csv += g17(trajectory.tau[k]);
        csv += ',';
        csv += g17(trajectory.beta[k][0]);
        csv += ',';
        csv += g17(trajectory.beta[k][1]);
        csv += ',';
        csv += g17(trajectory.b[k]);
        csv += '\n';
    }
    write_text(path, csv);
}

void write_contraction_json(const ContractionEstimate& estimate, const std::string& path) {
    njson tau_of = njson::array();
    for (const auto& [mu, tau] : estimate.tau_of) {
        tau_of.push_back(njson{{"mu", mu}, {"tau", tau}});
    }
    njson j{{"c_hat", estimate.c_hat},
            {"b_star", estimate.b_star},
            {"r_squared", estimate.r_squared},
            {"worst_initial", {estimate.worst_initial[0], estimate.worst_initial[1]}},
            {"tau_of", tau_of}};
    write_text(path, j.dump(2) + "\n");
}

void write_trace_csv(const std::vector<TraceRow>& trace, const std::string& path) {
    std::string csv =
        "period,beta0,beta1,implied_price,posted_price,quantity,forecast_error,projected\n";
    for (const auto& row : trace) {
        csv += std::to_string(row.period);
        csv += ',';
        csv += g17(row.beta0);
        csv += ',';
        csv += g17(row.beta1);
        csv += ',';
        csv += g17(row.implied_price);
        csv += ',';
        csv += g17(row.posted_price);
        csv += ',';
        csv += g17(row.quantity);
        csv += ',';
        csv += g17(row.forecast_error);
        csv += ',';
        csv += (row.projected ? '1' : '0');
        csv += '\n';
    }
    write_text(path, csv);
}

} // namespace pricelearn
