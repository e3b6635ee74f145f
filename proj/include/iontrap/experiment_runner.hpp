#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "iontrap/rate_model.hpp"
#include "iontrap/stochastic_dynamics.hpp"
#include "iontrap/thermometry_fits.hpp"

namespace iontrap
{

/// Invalid or unreadable protocol/config input. The message names the field.
class ConfigError : public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

struct BeamSpec
{
    double wavelength = 0.0; // m
    double waist = 0.0;      // m
    double power = 0.0;      // W
    Vec3 axis = Vec3::UnitZ();

    [[nodiscard]] GaussianBeam beam() const { return GaussianBeam(power, waist, wavelength, Vec3::Zero(), axis); }
    [[nodiscard]] double peak_intensity() const; // W/m^2
};

struct RepumpBeamSpec
{
    std::string lower;
    std::string upper;
    BeamSpec beam; // wavelength 0 means "use the line wavelength"
    double saturation_parameter = 0.0;
    double bare_detuning_hz = 0.0; // cycles/s, relative to the unshifted line
};

struct PreHold
{
    double duration = 0.0;            // s
    std::optional<double> power;      // W, dipole power during the delay
    double ambient_heating = 0.0;     // K/s
};

struct Protocol
{
    std::string name;
    std::optional<std::string> species_file; // built-in 138Ba+ when empty
    std::string initial_level = "S1/2";
    double initial_temperature = 300e-6; // K
    BeamSpec dipole_beam;
    double axial_frequency_hz = 0.0; // dc confinement, cycles/s
    Vec3 stray_field = Vec3::Zero(); // V/m
    double calibration_factor = 1.0;
    bool repump_enabled = false;
    std::vector<RepumpBeamSpec> repump_beams;
    std::optional<PreHold> pre_hold;
    std::vector<double> hold_durations; // s, strictly increasing
    // When non-empty the scan runs over trap depths (K) at hold_durations[0],
    // solving for the dipole power that gives each barrier height.
    std::vector<double> depths;
    int trials_per_point = 50;
    double ambient_heating = 0.0; // K/s during the hold
    double integration_step = 0.0; // s, 0 selects 1/(100 max omega)
    std::uint64_t master_seed = 1;
    CutoffModel cutoff_model = CutoffModel::exp2d;

    void validate() const;
    [[nodiscard]] bool is_depth_scan() const { return !depths.empty(); }
};

Protocol protocol_from_json(const std::string& json_text);
Protocol load_protocol_file(const std::string& path);
std::string protocol_to_json(const Protocol& protocol);

/// Level scheme named by the protocol (species file or built-in).
LevelScheme protocol_scheme(const Protocol& protocol);
/// Trap environment of the hold phase at the protocol's dipole power.
TrapEnvironment protocol_environment(const Protocol& protocol, std::optional<double> power = std::nullopt);
RepumpConfig protocol_repump(const Protocol& protocol, const LevelScheme& scheme);
/// Dipole power whose radial barrier for `level` equals `depth` (K).
double power_for_depth(const TrapEnvironment& env, const std::string& level, double depth);

struct RunRecord
{
    Protocol protocol;
    SurvivalCurve curve;          // `durations` holds the scan coordinate (s or K)
    std::vector<double> powers;   // dipole power per scan point, W
    std::optional<FitResult> lifetime_fit;
    std::optional<FitResult> temperature_fit;
    std::optional<RatePrediction> rates;
    double wall_seconds = 0.0;
    std::uint64_t seed = 0;
};

RunRecord run_protocol(const Protocol& protocol, unsigned threads = 0);

/// Built-in protocols keyed by name.
std::map<std::string, Protocol> builtin_presets();

/// duration_s (or depth_k), successes, trials, p, lo_1sigma, hi_1sigma.
void write_survival_csv(std::ostream& out, const RunRecord& record);
std::string fit_summary(const RunRecord& record);

} // namespace iontrap
