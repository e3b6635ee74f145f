#include "iontrap/rate_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "iontrap/constants.hpp"
#include "iontrap/random.hpp"
#include "iontrap/stochastic_dynamics.hpp"

namespace iontrap
{

double thermal_intensity_factor(const TrapEnvironment& env, std::string_view level, double temperature)
{
    if (temperature < 0.0)
        throw std::invalid_argument("temperature must be >= 0");
    const auto rep = trap_report(env, level);
    if (!rep.is_confining)
        throw std::invalid_argument("thermal averaging needs a confining level, got " + std::string(level));
    const double w = env.dipole_beams.front().waist();
    const double kt = Const::boltzmann * temperature;
    const double m = env.scheme.mass();
    // Gaussian average of a Gaussian profile, one factor per radial mode.
    // The axial spread is far below the Rayleigh range and is ignored.
    double factor = 1.0;
    for (double w2 : rep.radial_omega_squared) {
        const double var = kt / (m * w2);
        factor /= std::sqrt(1.0 + 4.0 * var / (w * w));
    }
    return factor;
}

RatePrediction predict_rates(const TrapEnvironment& env, std::string_view level, const RateOptions& options)
{
    env.validate();
    const auto minimum = locate_minimum(env, level);
    if (!minimum)
        throw std::invalid_argument("rate prediction needs a confining level; " + std::string(level) +
                                    " has no potential minimum");
    const auto& scheme = env.scheme;
    const auto idx = scheme.level_index(level);
    const double factor =
        options.thermal_temperature ? thermal_intensity_factor(env, level, *options.thermal_temperature) : 1.0;

    RatePrediction out;
    for (const auto& [dest, rate] : branch_resolved_rates(env, level, *minimum)) {
        out.gamma_offr += rate * factor;
        if (dest != scheme.levels()[idx].name)
            out.gamma_d += rate * factor;
    }
    for (std::size_t b = 0; b < env.dipole_beams.size(); ++b) {
        const auto resp = optical_response(env, idx, b);
        const double rate = resp.scatter_per_intensity * intensity_at(env.dipole_beams[b], *minimum) * factor;
        out.recoil_rate += 2.0 * rate * recoil_energy(env.dipole_beams[b].wavelength(), scheme.mass()) /
                           Const::boltzmann;
    }
    out.lifetime = out.gamma_d > 0.0 ? 1.0 / out.gamma_d : std::numeric_limits<double>::infinity();
    return out;
}

double survival_prediction(const RatePrediction& prediction, double t)
{
    if (t < 0.0)
        throw std::invalid_argument("survival_prediction needs t >= 0");
    return std::exp(-prediction.gamma_d * t);
}

UncertaintyBand uncertainty_band(const TrapEnvironment& env, std::string_view level,
                                 const ParameterUncertainties& uncertainties, const std::vector<double>& times,
                                 int n_samples, std::uint64_t seed, const RateOptions& options)
{
    if (n_samples < 100)
        throw std::invalid_argument("uncertainty_band needs n_samples >= 100");
    double power_rel = 0.0;
    double waist_rel = 0.0;
    for (const auto& [name, value] : uncertainties) {
        if (value < 0.0)
            throw std::invalid_argument("uncertainty for '" + name + "' must be >= 0");
        if (name == "power")
            power_rel = value;
        else if (name == "waist")
            waist_rel = value;
        else
            throw std::invalid_argument("unknown uncertainty parameter '" + name + "' (expected power or waist)");
    }
    for (double t : times)
        if (t < 0.0)
            throw std::invalid_argument("band times must be >= 0");

    const auto n = static_cast<std::size_t>(n_samples);
    std::vector<double> gamma(n, 0.0);
    parallel_for(n, 0, [&](std::size_t i) {
        Rng rng = make_substream(seed, i);
        std::normal_distribution<double> normal(0.0, 1.0);
        auto truncated = [&]() {
            double z = 0.0;
            do {
                z = normal(rng);
            } while (std::abs(z) > 3.0);
            return z;
        };
        const double power_scale = 1.0 + power_rel * truncated();
        const double waist_scale = 1.0 + waist_rel * truncated();
        TrapEnvironment sample = env;
        for (auto& beam : sample.dipole_beams) {
            beam = GaussianBeam(beam.power() * std::max(power_scale, 0.0), beam.waist() * waist_scale,
                                beam.wavelength(), beam.focus_position(), beam.axis());
        }
        gamma[i] = predict_rates(sample, level, options).gamma_d;
    });

    std::sort(gamma.begin(), gamma.end());
    auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(n - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, n - 1);
        return gamma[lo] + (pos - static_cast<double>(lo)) * (gamma[hi] - gamma[lo]);
    };
    // Survival is monotone in the loss rate, so rate quantiles map to band edges.
    const double g_fast = quantile(0.84);
    const double g_slow = quantile(0.16);
    UncertaintyBand band;
    band.times = times;
    for (double t : times) {
        band.p_lo.push_back(std::exp(-g_fast * t));
        band.p_hi.push_back(std::exp(-g_slow * t));
    }
    return band;
}

} // namespace iontrap
