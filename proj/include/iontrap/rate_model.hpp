#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "iontrap/stark_potentials.hpp"

namespace iontrap
{

struct RatePrediction
{
    double gamma_offr = 0.0;  // total off-resonant scattering rate, 1/s
    double gamma_d = 0.0;     // rate of leaving the level, 1/s
    double lifetime = std::numeric_limits<double>::infinity(); // s, infinite when gamma_d == 0
    double recoil_rate = 0.0; // K/s, 2 gamma E_rec / k_B summed over beams
};

struct RateOptions
{
    // When set, rates are averaged over the thermal position spread at this
    // temperature instead of being taken at the potential minimum.
    std::optional<double> thermal_temperature;
};

RatePrediction predict_rates(const TrapEnvironment& env, std::string_view level, const RateOptions& options = {});

/// exp(-gamma_d t).
double survival_prediction(const RatePrediction& prediction, double t);

/// Mean of exp(-2 r^2 / w^2) over the radial thermal distribution of `level`.
double thermal_intensity_factor(const TrapEnvironment& env, std::string_view level, double temperature);

struct UncertaintyBand
{
    std::vector<double> times;
    std::vector<double> p_lo; // 16th percentile
    std::vector<double> p_hi; // 84th percentile
};

/**
 * Relative 1 sigma uncertainties keyed by parameter: "power" and "waist"
 * (applied to every dipole beam). Samples are Gaussian, truncated at 3 sigma.
 */
using ParameterUncertainties = std::map<std::string, double>;

UncertaintyBand uncertainty_band(const TrapEnvironment& env, std::string_view level,
                                 const ParameterUncertainties& uncertainties, const std::vector<double>& times,
                                 int n_samples, std::uint64_t seed, const RateOptions& options = {});

} // namespace iontrap
