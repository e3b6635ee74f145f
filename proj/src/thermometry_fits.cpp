#include "iontrap/thermometry_fits.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>

#include "iontrap/constants.hpp"

namespace iontrap
{

namespace
{

constexpr double kTiny = 1e-300;

// One-sided 95 % likelihood-ratio threshold, chi^2_1(0.90) / 2.
constexpr double kOneSided95 = 1.3527717;

struct ModelValue
{
    double p;
    double dp;  // d p / d theta
    double d2p; // d^2 p / d theta^2
};

using BinomialModel = std::function<ModelValue(double x, double theta)>;

void validate_points(const std::vector<BinomialPoint>& points)
{
    std::set<double> distinct;
    for (const auto& pt : points) {
        if (pt.trials < 1)
            throw std::invalid_argument("every scan point needs trials >= 1");
        if (pt.successes < 0 || pt.successes > pt.trials)
            throw std::invalid_argument("successes must lie in [0, trials]");
        if (!(pt.x >= 0.0) || !std::isfinite(pt.x))
            throw std::invalid_argument("scan coordinates must be finite and >= 0");
        distinct.insert(pt.x);
    }
    if (distinct.size() < 3)
        throw std::invalid_argument("fit needs at least three distinct scan points");
}

double log_likelihood(const std::vector<BinomialPoint>& points, const BinomialModel& model, double theta,
                      double amplitude = 1.0)
{
    double ll = 0.0;
    for (const auto& pt : points) {
        const double p = std::clamp(amplitude * model(pt.x, theta).p, 0.0, 1.0);
        const int k = pt.successes;
        const int f = pt.trials - pt.successes;
        if (k > 0)
            ll += k * std::log(std::max(p, kTiny));
        if (f > 0)
            ll += f * std::log(std::max(1.0 - p, kTiny));
    }
    return ll;
}

struct Derivatives
{
    double score;
    double information; // observed, -d^2 LL / d theta^2
};

Derivatives derivatives(const std::vector<BinomialPoint>& points, const BinomialModel& model, double theta)
{
    Derivatives d{0.0, 0.0};
    for (const auto& pt : points) {
        const auto m = model(pt.x, theta);
        const double p = std::clamp(m.p, kTiny, 1.0 - 1e-16);
        const double k = pt.successes;
        const double f = pt.trials - pt.successes;
        const double g = k / p - f / (1.0 - p);
        d.score += g * m.dp;
        d.information += (k / (p * p) + f / ((1.0 - p) * (1.0 - p))) * m.dp * m.dp - g * m.d2p;
    }
    return d;
}

/// Golden-section maximisation of f over [lo, hi] in log space.
double golden_log_max(const std::function<double(double)>& f, double lo, double hi, double rel_tol = 1e-4)
{
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = std::log(lo);
    double b = std::log(hi);
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(std::exp(c));
    double fd = f(std::exp(d));
    while (b - a > rel_tol) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(std::exp(c));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(std::exp(d));
        }
    }
    return std::exp(0.5 * (a + b));
}

struct OneParameterFit
{
    double theta;
    double sigma;
    double ll;
    bool interior;
};

/// Golden section to locate the optimum, then Newton steps to polish it.
OneParameterFit fit_one_parameter(const std::vector<BinomialPoint>& points, const BinomialModel& model, double lo,
                                  double hi)
{
    auto ll = [&](double th) { return log_likelihood(points, model, th); };
    double theta = golden_log_max(ll, lo, hi);
    const bool at_edge = theta < lo * 1.01 || theta > hi * 0.99;
    if (!at_edge) {
        for (int it = 0; it < 20; ++it) {
            const auto d = derivatives(points, model, theta);
            if (!(d.information > 0.0))
                break;
            double next = theta + d.score / d.information;
            // Stay within a factor two of the bracketed optimum.
            next = std::clamp(next, 0.5 * theta, 2.0 * theta);
            if (ll(next) < ll(theta))
                break;
            const double change = std::abs(next - theta);
            theta = next;
            if (change < 1e-13 * theta)
                break;
        }
    }
    const auto d = derivatives(points, model, theta);
    const double sigma = d.information > 0.0 ? 1.0 / std::sqrt(d.information) : 0.0;
    return {theta, sigma, ll(theta), !at_edge && sigma > 0.0};
}

std::pair<double, double> positive_range(const std::vector<BinomialPoint>& points)
{
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (const auto& pt : points) {
        if (pt.x > 0.0) {
            lo = std::min(lo, pt.x);
            hi = std::max(hi, pt.x);
        }
    }
    if (!(hi > 0.0))
        throw std::invalid_argument("fit needs positive scan coordinates");
    return {lo, hi};
}

ModelValue exponential_in_rate(double t, double rate)
{
    const double p = std::exp(-rate * t);
    return {p, -t * p, t * t * p};
}

} // namespace

std::pair<double, double> wilson_interval(int successes, int trials, double z)
{
    if (trials <= 0)
        throw std::invalid_argument("wilson_interval needs trials >= 1");
    if (successes < 0 || successes > trials)
        throw std::invalid_argument("successes must lie in [0, trials]");
    const double n = trials;
    const double p = successes / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    double lo = std::max(0.0, center - half);
    double hi = std::min(1.0, center + half);
    if (successes == 0)
        lo = 0.0;
    if (successes == trials)
        hi = 1.0;
    return {lo, hi};
}

FitResult fit_exponential(const std::vector<BinomialPoint>& points, bool free_amplitude)
{
    validate_points(points);
    const auto [t_min, t_max] = positive_range(points);
    FitResult out;

    long total_trials = 0;
    long total_successes = 0;
    double exposure = 0.0;
    for (const auto& pt : points) {
        total_trials += pt.trials;
        total_successes += pt.successes;
        exposure += pt.trials * pt.x;
    }
    if (total_successes == total_trials) {
        // No decay observed: only a lower bound on tau is available.
        out.converged = false;
        out.lower_bound = exposure / kOneSided95;
        out.value = *out.lower_bound;
        out.log_likelihood = 0.0;
        return out;
    }

    const double rate_lo = 1e-4 / t_max;
    const double rate_hi = 1e4 / t_min;
    const BinomialModel model = exponential_in_rate;

    if (!free_amplitude) {
        const auto fit = fit_one_parameter(points, model, rate_lo, rate_hi);
        out.value = 1.0 / fit.theta;
        out.sigma = fit.sigma / (fit.theta * fit.theta);
        out.log_likelihood = fit.ll;
        out.converged = fit.interior;
        if (!fit.interior && fit.theta > 0.99 * rate_hi)
            out.upper_bound = 1.0 / rate_hi;
        return out;
    }

    // Profile the amplitude out for each rate, then maximise over the rate.
    auto best_amplitude = [&](double rate) {
        auto ll_a = [&](double a) { return log_likelihood(points, model, rate, a); };
        return golden_log_max(ll_a, 1e-6, 1.0, 1e-9);
    };
    auto profile = [&](double rate) { return log_likelihood(points, model, rate, best_amplitude(rate)); };
    const double rate = golden_log_max(profile, rate_lo, rate_hi, 1e-9);
    const double amp = best_amplitude(rate);
    out.value = 1.0 / rate;
    out.amplitude = amp;
    out.log_likelihood = log_likelihood(points, model, rate, amp);

    // Observed information in (amplitude, rate) by finite differences.
    auto f = [&](double a, double r) { return log_likelihood(points, model, r, a); };
    const double ha = 1e-4 * amp;
    const double hr = 1e-4 * rate;
    const double a0 = std::min(amp, 1.0 - ha);
    const double faa = (f(a0 + ha, rate) - 2.0 * f(a0, rate) + f(a0 - ha, rate)) / (ha * ha);
    const double frr = (f(a0, rate + hr) - 2.0 * f(a0, rate) + f(a0, rate - hr)) / (hr * hr);
    const double far = (f(a0 + ha, rate + hr) - f(a0 + ha, rate - hr) - f(a0 - ha, rate + hr) +
                        f(a0 - ha, rate - hr)) /
                       (4.0 * ha * hr);
    const double det = faa * frr - far * far;
    const bool edge = rate < rate_lo * 1.01 || rate > rate_hi * 0.99;
    if (det > 0.0 && faa < 0.0) {
        const double var_rate = -faa / det;
        out.sigma = std::sqrt(var_rate) / (rate * rate);
        out.converged = !edge;
    } else {
        // Amplitude pinned at 1: fall back to the fixed-amplitude curvature.
        const auto d = derivatives(points, model, rate);
        out.sigma = d.information > 0.0 ? 1.0 / std::sqrt(d.information) / (rate * rate) : 0.0;
        out.converged = !edge && out.sigma > 0.0;
    }
    return out;
}

CutoffModel parse_cutoff_model(std::string_view name)
{
    if (name == "exp2d")
        return CutoffModel::exp2d;
    if (name == "exp1")
        return CutoffModel::exp1;
    throw std::invalid_argument("unknown radial cutoff model '" + std::string(name) + "' (expected exp2d or exp1)");
}

std::string_view to_string(CutoffModel model)
{
    return model == CutoffModel::exp2d ? "exp2d" : "exp1";
}

double radial_cutoff_popt(double depth, double temperature, CutoffModel model)
{
    if (depth < 0.0)
        throw std::invalid_argument("depth must be >= 0");
    if (!(temperature > 0.0))
        throw std::invalid_argument("temperature must be > 0");
    const double eta = depth / (Const::boltzmann * temperature);
    switch (model) {
    case CutoffModel::exp2d:
        return -std::expm1(-eta) - eta * std::exp(-eta);
    case CutoffModel::exp1:
        return -std::expm1(-eta);
    }
    throw std::invalid_argument("invalid radial cutoff model");
}

FitResult fit_temperature(const std::vector<BinomialPoint>& points, CutoffModel model)
{
    validate_points(points);
    const auto [d_min, d_max] = positive_range(points);
    const double k = Const::boltzmann;

    const BinomialModel cutoff = [model](double depth, double temperature) -> ModelValue {
        const double eta = depth / (Const::boltzmann * temperature);
        const double e = std::exp(-eta);
        double p = 0.0, dp_deta = 0.0, d2p_deta2 = 0.0;
        if (model == CutoffModel::exp2d) {
            p = -std::expm1(-eta) - eta * e;
            dp_deta = eta * e;
            d2p_deta2 = (1.0 - eta) * e;
        } else {
            p = -std::expm1(-eta);
            dp_deta = e;
            d2p_deta2 = -e;
        }
        const double deta = -eta / temperature;
        const double d2eta = 2.0 * eta / (temperature * temperature);
        return {p, dp_deta * deta, d2p_deta2 * deta * deta + dp_deta * d2eta};
    };

    const double t_lo = 1e-4 * d_min / k;
    const double t_hi = 1e4 * d_max / k;
    const auto fit = fit_one_parameter(points, cutoff, t_lo, t_hi);
    FitResult out;
    out.value = fit.theta;
    out.sigma = fit.sigma;
    out.log_likelihood = fit.ll;
    out.converged = fit.interior;
    if (!fit.interior) {
        if (fit.theta < 1.01 * t_lo)
            out.upper_bound = fit.theta;
        else
            out.lower_bound = fit.theta;
    }
    return out;
}

RateEstimate heating_rate(const FitResult& t1, const FitResult& t2, double delay)
{
    if (!(delay > 0.0))
        throw std::invalid_argument("heating_rate needs a positive delay");
    return {(t2.value - t1.value) / delay, std::hypot(t1.sigma, t2.sigma) / delay};
}

} // namespace iontrap
