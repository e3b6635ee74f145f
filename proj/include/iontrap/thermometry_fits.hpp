#pragma once

#include <optional>
#include <string_view>
#include <utility>
#include <vector>

namespace iontrap
{

/// Counts at one scan point. `x` is a hold duration (s) or a trap depth (J).
struct BinomialPoint
{
    double x = 0.0;
    int successes = 0;
    int trials = 0;
};

struct FitResult
{
    double value = 0.0; // tau in s, or temperature in K
    double sigma = 0.0; // 1 sigma from the observed information
    double log_likelihood = 0.0;
    bool converged = false;
    // Set instead of a value when the data only constrain one side
    // (95 % one-sided likelihood-ratio bound).
    std::optional<double> lower_bound;
    std::optional<double> upper_bound;
    double amplitude = 1.0; // free-amplitude exponential only
};

/// Wilson score interval; z = 1 gives the 1 sigma band.
std::pair<double, double> wilson_interval(int successes, int trials, double z = 1.0);

/// Maximum-likelihood fit of p(t) = A exp(-t/tau); A = 1 unless `free_amplitude`.
FitResult fit_exponential(const std::vector<BinomialPoint>& points, bool free_amplitude = false);

enum class CutoffModel
{
    exp2d, // energy in two radial modes: 1 - (1 + eta) e^-eta
    exp1,  // 1 - e^-eta
};
CutoffModel parse_cutoff_model(std::string_view name);
std::string_view to_string(CutoffModel model);

/// Bound fraction of a thermal ensemble for a radial barrier `depth` (J).
double radial_cutoff_popt(double depth, double temperature, CutoffModel model = CutoffModel::exp2d);

/// Maximum-likelihood temperature from survival counts over trap depths (x in J).
FitResult fit_temperature(const std::vector<BinomialPoint>& points, CutoffModel model = CutoffModel::exp2d);

struct RateEstimate
{
    double rate = 0.0;  // K/s
    double sigma = 0.0; // K/s
};
/// (T2 - T1) / delay with errors added in quadrature.
RateEstimate heating_rate(const FitResult& t1, const FitResult& t2, double delay);

} // namespace iontrap
