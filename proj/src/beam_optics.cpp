#include "iontrap/beam_optics.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace iontrap
{

GaussianBeam::GaussianBeam(double power, double waist, double wavelength, Vec3 focus_position, Vec3 axis)
    : power_(power)
    , waist_(waist)
    , wavelength_(wavelength)
    , focus_(std::move(focus_position))
    , axis_(std::move(axis))
{
    if (!(power_ >= 0.0))
        throw std::invalid_argument("beam power must be >= 0");
    if (!(waist_ > 0.0))
        throw std::invalid_argument("beam waist must be > 0");
    if (!(wavelength_ > 0.0))
        throw std::invalid_argument("beam wavelength must be > 0");
    if (std::abs(axis_.norm() - 1.0) > 1e-12)
        throw std::invalid_argument("beam axis must be a unit vector");
}

GaussianBeam GaussianBeam::from_peak_intensity(double intensity, double waist, double wavelength,
                                               Vec3 focus_position, Vec3 axis)
{
    const double power = intensity * std::numbers::pi * waist * waist / 2.0;
    return {power, waist, wavelength, std::move(focus_position), std::move(axis)};
}

GaussianBeam GaussianBeam::with_power(double power) const
{
    return {power, waist_, wavelength_, focus_, axis_};
}

GaussianBeam::LocalCoords GaussianBeam::local(const Vec3& position) const
{
    const Vec3 d = position - focus_;
    const double axial = d.dot(axis_);
    return {d - axial * axis_, axial};
}

double peak_intensity(const GaussianBeam& beam)
{
    return 2.0 * beam.power() / (std::numbers::pi * beam.waist() * beam.waist());
}

double rayleigh_range(const GaussianBeam& beam)
{
    return std::numbers::pi * beam.waist() * beam.waist() / beam.wavelength();
}

double beam_radius(const GaussianBeam& beam, double axial_offset)
{
    const double q = axial_offset / rayleigh_range(beam);
    return beam.waist() * std::sqrt(1.0 + q * q);
}

double intensity_at(const GaussianBeam& beam, const Vec3& position)
{
    const auto [radial, axial] = beam.local(position);
    const double zr = rayleigh_range(beam);
    const double w0sq = beam.waist() * beam.waist();
    const double wsq = w0sq * (1.0 + (axial / zr) * (axial / zr));
    return peak_intensity(beam) * (w0sq / wsq) * std::exp(-2.0 * radial.squaredNorm() / wsq);
}

IntensitySample intensity_with_gradient(const GaussianBeam& beam, const Vec3& position)
{
    const auto [radial, axial] = beam.local(position);
    const double zr = rayleigh_range(beam);
    const double w0sq = beam.waist() * beam.waist();
    const double wsq = w0sq * (1.0 + (axial / zr) * (axial / zr));
    const double rsq = radial.squaredNorm();
    const double value = peak_intensity(beam) * (w0sq / wsq) * std::exp(-2.0 * rsq / wsq);
    // d ln I / d(w^2) times d(w^2)/dz
    const double dwsq_dz = 2.0 * w0sq * axial / (zr * zr);
    const double dlnI_dz = (-1.0 / wsq + 2.0 * rsq / (wsq * wsq)) * dwsq_dz;
    Vec3 grad = value * (-4.0 / wsq) * radial + (value * dlnI_dz) * beam.axis();
    return {value, grad};
}

} // namespace iontrap
