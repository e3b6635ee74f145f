#pragma once

#include <Eigen/Core>

namespace iontrap
{

using Vec3 = Eigen::Vector3d;

/// Ideal TEM00 beam. Waist is the 1/e^2 intensity radius at the focus.
class GaussianBeam
{
  public:
    GaussianBeam(double power, double waist, double wavelength,
                 Vec3 focus_position = Vec3::Zero(), Vec3 axis = Vec3::UnitZ());

    /// Beam whose peak intensity equals `intensity` (W/m^2).
    static GaussianBeam from_peak_intensity(double intensity, double waist, double wavelength,
                                            Vec3 focus_position = Vec3::Zero(),
                                            Vec3 axis = Vec3::UnitZ());

    [[nodiscard]] double power() const { return power_; }
    [[nodiscard]] double waist() const { return waist_; }
    [[nodiscard]] double wavelength() const { return wavelength_; }
    [[nodiscard]] const Vec3& focus_position() const { return focus_; }
    [[nodiscard]] const Vec3& axis() const { return axis_; }

    [[nodiscard]] GaussianBeam with_power(double power) const;

    /// Radial offset from the beam axis and axial offset from the focus.
    struct LocalCoords
    {
        Vec3 radial;
        double axial;
    };
    [[nodiscard]] LocalCoords local(const Vec3& position) const;

  private:
    double power_;
    double waist_;
    double wavelength_;
    Vec3 focus_;
    Vec3 axis_;
};

double peak_intensity(const GaussianBeam& beam);
double rayleigh_range(const GaussianBeam& beam);
double beam_radius(const GaussianBeam& beam, double axial_offset);
double intensity_at(const GaussianBeam& beam, const Vec3& position);

/// Intensity and its spatial gradient in one evaluation.
struct IntensitySample
{
    double value;
    Vec3 gradient;
};
IntensitySample intensity_with_gradient(const GaussianBeam& beam, const Vec3& position);

} // namespace iontrap
