#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "iontrap/atomic_data.hpp"
#include "iontrap/beam_optics.hpp"

namespace iontrap
{

/// Residual dc electric field at the trap. Magnitudes above 10 V/m are rejected.
struct StrayField
{
    Vec3 electric_field = Vec3::Zero(); // V/m

    StrayField() = default;
    explicit StrayField(Vec3 field);
};

/// Everything that shapes the potentials seen by the ion.
struct TrapEnvironment
{
    LevelScheme scheme;
    std::vector<GaussianBeam> dipole_beams;
    double axial_frequency = 0.0; // rad/s, dc confinement along z
    StrayField stray;
    double calibration_factor = 1.0;
    // Optional static scalar polarizabilities (atomic units) replacing the line sum for a level.
    std::map<std::string, double> polarizability_overrides_au;

    void validate() const;
};

/**
 * Light shift and photon scattering of one level in one beam, per unit
 * intensity. `destinations` holds the probability of each final level after
 * a scattering event (indices into the scheme's level list).
 */
struct OpticalResponse
{
    double potential_per_intensity = 0.0; // J per W/m^2
    double scatter_per_intensity = 0.0;   // 1/s per W/m^2
    std::vector<std::pair<std::size_t, double>> destinations;
};

OpticalResponse optical_response(const TrapEnvironment& env, std::size_t level, std::size_t beam);

/// Contribution of a single line to a level's light shift and scattering.
struct LineShift
{
    double potential_per_intensity;          // includes the counter-rotating term
    double rotating_potential_per_intensity; // rotating term only
    double scatter_per_intensity;            // zero unless the level is the line's lower level
    double detuning;                         // laser minus transition angular frequency
};
LineShift line_shift(const LevelScheme& scheme, const TransitionLine& line, std::size_t level,
                     double laser_wavelength);

// Optical light shift only.
double dipole_potential(const TrapEnvironment& env, std::string_view level, const Vec3& position);
// Optical + stray field + axial dc confinement.
double total_potential(const TrapEnvironment& env, std::string_view level, const Vec3& position);
Vec3 total_force(const TrapEnvironment& env, std::string_view level, const Vec3& position);

double scattering_rate(const TrapEnvironment& env, std::string_view level, const Vec3& position);
std::map<std::string, double> branch_resolved_rates(const TrapEnvironment& env, std::string_view level,
                                                    const Vec3& position);

/// Hessian of the total potential by central differences of the analytic force.
Eigen::Matrix3d potential_hessian(const TrapEnvironment& env, std::string_view level, const Vec3& position);

struct PotentialReport
{
    std::string level;
    double depth = 0.0;          // J, radial escape barrier
    double optical_depth = 0.0;  // J, -U_optical at the beam focus (no stray field)
    Vec3 minimum_position = Vec3::Zero();
    std::array<double, 2> radial_omega_squared{}; // rad^2/s^2, signed, descending
    double axial_omega_squared = 0.0;
    Eigen::Matrix3d principal_axes = Eigen::Matrix3d::Identity(); // columns: radial0, radial1, axial
    bool is_confining = false;

    // sign(w^2) * sqrt(|w^2|)
    [[nodiscard]] double radial_frequency(std::size_t i) const;
    [[nodiscard]] double axial_frequency() const;
};

std::optional<Vec3> locate_minimum(const TrapEnvironment& env, std::string_view level);
PotentialReport trap_report(const TrapEnvironment& env, std::string_view level);

/// sqrt(4 U0 / (m w^2)): harmonic radial frequency of a Gaussian well.
double analytic_radial_frequency(double depth, double mass, double waist);

Vec3 stray_displacement(const StrayField& field, double radial_frequency, double mass);
/// Displacement change when switching between two confinements; the compensation observable.
Vec3 differential_stray_displacement(const StrayField& field, double frequency_a, double frequency_b,
                                     double mass);

} // namespace iontrap
