#pragma once

#include <numbers>

namespace iontrap
{

// CODATA 2018 values, SI units.
struct PhysicalConstants
{
    static constexpr double speed_of_light = 299792458.0;        // m/s
    static constexpr double planck_reduced = 1.054571817e-34;    // J s
    static constexpr double planck = 2.0 * std::numbers::pi * planck_reduced;
    static constexpr double boltzmann = 1.380649e-23;            // J/K
    static constexpr double elementary_charge = 1.602176634e-19; // C
    static constexpr double atomic_mass_unit = 1.66053906660e-27; // kg
    static constexpr double vacuum_permittivity = 8.8541878128e-12; // F/m
    // Atomic unit of dipole polarizability in C m^2 / V.
    static constexpr double atomic_unit_polarizability = 1.64877727436e-41;
};

using Const = PhysicalConstants;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Wavenumber in cm^-1 to energy in J.
constexpr double wavenumber_to_joule(double cm_inverse)
{
    return Const::planck * Const::speed_of_light * cm_inverse * 100.0;
}

constexpr double wavelength_to_angular_frequency(double wavelength)
{
    return kTwoPi * Const::speed_of_light / wavelength;
}

} // namespace iontrap
