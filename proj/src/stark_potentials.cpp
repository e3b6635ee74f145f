#include "iontrap/stark_potentials.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

#include "iontrap/constants.hpp"

namespace iontrap
{

StrayField::StrayField(Vec3 field)
    : electric_field(std::move(field))
{
    if (!(electric_field.norm() < 10.0))
        throw std::invalid_argument("stray field magnitude must be below 10 V/m (check units)");
}

void TrapEnvironment::validate() const
{
    if (!(axial_frequency >= 0.0))
        throw std::invalid_argument("axial_frequency must be >= 0");
    if (!(calibration_factor > 0.5 && calibration_factor < 2.0))
        throw std::invalid_argument("calibration_factor must lie in (0.5, 2.0)");
    if (dipole_beams.empty())
        throw std::invalid_argument("trap environment needs at least one dipole beam");
    if (!(stray.electric_field.norm() < 10.0))
        throw std::invalid_argument("stray field magnitude must be below 10 V/m (check units)");
    for (const auto& entry : polarizability_overrides_au)
        if (!scheme.find_level(entry.first))
            throw std::invalid_argument("polarizability override names unknown level " + entry.first);
}

LineShift line_shift(const LevelScheme& scheme, const TransitionLine& line, std::size_t level,
                     double laser_wavelength)
{
    const auto upper = scheme.level_index(line.upper);
    const auto lower = scheme.level_index(line.lower);
    if (level != upper && level != lower)
        return {0.0, 0.0, 0.0, 0.0};

    const double c = Const::speed_of_light;
    const double w0 = scheme.transition_frequency(line);
    const double wl = wavelength_to_angular_frequency(laser_wavelength);
    const double delta = wl - w0;
    if (std::abs(delta) < 1e-9 * w0)
        throw std::invalid_argument("laser is resonant with line " + line.upper + " -> " + line.lower);

    const double ju = scheme.levels()[upper].j;
    const double jl = scheme.levels()[lower].j;
    const double gamma = line.branching_fraction / scheme.levels()[upper].lifetime;
    // Orientation-averaged line strength relative to a closed two-level transition.
    const double weight = (2.0 * ju + 1.0) / (3.0 * (2.0 * jl + 1.0));
    const double base = -weight * 3.0 * std::numbers::pi * c * c / (2.0 * w0 * w0 * w0) * gamma;

    const double full = base * (1.0 / (w0 - wl) + 1.0 / (w0 + wl));
    const double rotating = base / (w0 - wl);
    if (level == lower) {
        const double ratio = wl / w0;
        const double scatter =
            ratio * ratio * ratio * gamma * std::abs(rotating) / (Const::planck_reduced * std::abs(delta));
        return {full, rotating, scatter, delta};
    }
    // Total shift over all sublevels is conserved between the two levels.
    const double degeneracy = (2.0 * jl + 1.0) / (2.0 * ju + 1.0);
    return {-full * degeneracy, -rotating * degeneracy, 0.0, delta};
}

OpticalResponse optical_response(const TrapEnvironment& env, std::size_t level, std::size_t beam)
{
    const auto& scheme = env.scheme;
    const double lambda = env.dipole_beams.at(beam).wavelength();
    OpticalResponse out;

    std::vector<double> dest(scheme.levels().size(), 0.0);
    for (const auto& line : scheme.lines()) {
        const auto shift = line_shift(scheme, line, level, lambda);
        out.potential_per_intensity += shift.potential_per_intensity;
        if (shift.scatter_per_intensity > 0.0) {
            out.scatter_per_intensity += shift.scatter_per_intensity;
            const auto upper = line.upper;
            for (const auto& decay : scheme.lines())
                if (decay.upper == upper)
                    dest[scheme.level_index(decay.lower)] += shift.scatter_per_intensity * decay.branching_fraction;
        }
    }
    out.potential_per_intensity *= env.calibration_factor;
    out.scatter_per_intensity *= env.calibration_factor;

    const auto& name = scheme.levels()[level].name;
    if (auto it = env.polarizability_overrides_au.find(name); it != env.polarizability_overrides_au.end()) {
        const double alpha = it->second * Const::atomic_unit_polarizability;
        out.potential_per_intensity = -alpha / (2.0 * Const::vacuum_permittivity * Const::speed_of_light);
    }

    double total = 0.0;
    for (double d : dest)
        total += d;
    if (total > 0.0)
        for (std::size_t i = 0; i < dest.size(); ++i)
            if (dest[i] > 0.0)
                out.destinations.emplace_back(i, dest[i] / total);
    return out;
}

namespace
{

double dc_potential(const TrapEnvironment& env, const Vec3& position)
{
    const double m = env.scheme.mass();
    const double wz = env.axial_frequency;
    return 0.5 * m * wz * wz * position.z() * position.z() -
           Const::elementary_charge * env.stray.electric_field.dot(position);
}

Vec3 dc_force(const TrapEnvironment& env, const Vec3& position)
{
    const double m = env.scheme.mass();
    const double wz = env.axial_frequency;
    Vec3 f = Const::elementary_charge * env.stray.electric_field;
    f.z() -= m * wz * wz * position.z();
    return f;
}

std::vector<double> potential_coefficients(const TrapEnvironment& env, std::size_t level)
{
    std::vector<double> coeff;
    for (std::size_t b = 0; b < env.dipole_beams.size(); ++b)
        coeff.push_back(optical_response(env, level, b).potential_per_intensity);
    return coeff;
}

double optical_potential(const TrapEnvironment& env, const std::vector<double>& coeff, const Vec3& position)
{
    double u = 0.0;
    for (std::size_t b = 0; b < coeff.size(); ++b)
        u += coeff[b] * intensity_at(env.dipole_beams[b], position);
    return u;
}

double total_from_coefficients(const TrapEnvironment& env, const std::vector<double>& coeff, const Vec3& p)
{
    return optical_potential(env, coeff, p) + dc_potential(env, p);
}

Vec3 force_from_coefficients(const TrapEnvironment& env, const std::vector<double>& coeff, const Vec3& p)
{
    Vec3 f = dc_force(env, p);
    for (std::size_t b = 0; b < coeff.size(); ++b)
        f -= coeff[b] * intensity_with_gradient(env.dipole_beams[b], p).gradient;
    return f;
}

Eigen::Matrix3d hessian_from_coefficients(const TrapEnvironment& env, const std::vector<double>& coeff,
                                          const Vec3& p)
{
    const double h = 1e-3 * env.dipole_beams.front().waist();
    Eigen::Matrix3d hess;
    for (int k = 0; k < 3; ++k) {
        Vec3 dp = Vec3::Zero();
        dp[k] = h;
        const Vec3 gplus = -force_from_coefficients(env, coeff, p + dp);
        const Vec3 gminus = -force_from_coefficients(env, coeff, p - dp);
        hess.col(k) = (gplus - gminus) / (2.0 * h);
    }
    return 0.5 * (hess + hess.transpose());
}

} // namespace

double dipole_potential(const TrapEnvironment& env, std::string_view level, const Vec3& position)
{
    return optical_potential(env, potential_coefficients(env, env.scheme.level_index(level)), position);
}

double total_potential(const TrapEnvironment& env, std::string_view level, const Vec3& position)
{
    return dipole_potential(env, level, position) + dc_potential(env, position);
}

Vec3 total_force(const TrapEnvironment& env, std::string_view level, const Vec3& position)
{
    return force_from_coefficients(env, potential_coefficients(env, env.scheme.level_index(level)), position);
}

double scattering_rate(const TrapEnvironment& env, std::string_view level, const Vec3& position)
{
    const auto idx = env.scheme.level_index(level);
    double rate = 0.0;
    for (std::size_t b = 0; b < env.dipole_beams.size(); ++b)
        rate += optical_response(env, idx, b).scatter_per_intensity * intensity_at(env.dipole_beams[b], position);
    return rate;
}

std::map<std::string, double> branch_resolved_rates(const TrapEnvironment& env, std::string_view level,
                                                    const Vec3& position)
{
    const auto idx = env.scheme.level_index(level);
    std::map<std::string, double> out;
    for (std::size_t b = 0; b < env.dipole_beams.size(); ++b) {
        const auto resp = optical_response(env, idx, b);
        const double rate = resp.scatter_per_intensity * intensity_at(env.dipole_beams[b], position);
        for (const auto& [dest, frac] : resp.destinations)
            out[env.scheme.levels()[dest].name] += rate * frac;
    }
    return out;
}

Eigen::Matrix3d potential_hessian(const TrapEnvironment& env, std::string_view level, const Vec3& position)
{
    return hessian_from_coefficients(env, potential_coefficients(env, env.scheme.level_index(level)), position);
}

double PotentialReport::radial_frequency(std::size_t i) const
{
    const double w2 = radial_omega_squared.at(i);
    return std::copysign(std::sqrt(std::abs(w2)), w2);
}

double PotentialReport::axial_frequency() const
{
    return std::copysign(std::sqrt(std::abs(axial_omega_squared)), axial_omega_squared);
}

namespace
{

std::optional<Vec3> newton_minimum(const TrapEnvironment& env, const std::vector<double>& coeff)
{
    const auto& beam = env.dipole_beams.front();
    const double w = beam.waist();
    Vec3 x = beam.focus_position();
    for (int iter = 0; iter < 100; ++iter) {
        const Eigen::Matrix3d hess = hessian_from_coefficients(env, coeff, x);
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(hess);
        if (eig.eigenvalues().minCoeff() <= 0.0)
            return std::nullopt;
        const Vec3 grad = -force_from_coefficients(env, coeff, x);
        Vec3 step = -hess.ldlt().solve(grad);
        // Damp steps larger than a fraction of the waist.
        const double limit = 0.25 * w;
        if (step.norm() > limit)
            step *= limit / step.norm();
        x += step;
        if (beam.local(x).radial.norm() > 3.0 * w)
            return std::nullopt;
        if (step.norm() < 1e-9 * w)
            return x;
    }
    return std::nullopt;
}

// Maximum of the potential along a ray in the radial plane, measured from the
// minimum, out to the escape radius (3 w from the beam axis).
double ray_barrier(const TrapEnvironment& env, const std::vector<double>& coeff, const Vec3& origin,
                   const Vec3& direction, double escape_radius)
{
    const auto& beam = env.dipole_beams.front();
    // Solve |radial(origin) + s * direction| = escape_radius for s > 0.
    const Vec3 r0 = beam.local(origin).radial;
    const double b = r0.dot(direction);
    const double c = r0.squaredNorm() - escape_radius * escape_radius;
    const double s_max = -b + std::sqrt(b * b - c);

    constexpr int kSamples = 240;
    double best = -std::numeric_limits<double>::infinity();
    int best_i = 0;
    for (int i = 1; i <= kSamples; ++i) {
        const double s = s_max * i / kSamples;
        const double u = total_from_coefficients(env, coeff, origin + s * direction);
        if (u > best) {
            best = u;
            best_i = i;
        }
    }
    if (best_i == kSamples)
        return best;
    // Golden-section refinement around the best sample.
    double lo = s_max * (best_i - 1) / kSamples;
    double hi = s_max * (best_i + 1) / kSamples;
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = hi - g * (hi - lo), bb = lo + g * (hi - lo);
    double fa = total_from_coefficients(env, coeff, origin + a * direction);
    double fb = total_from_coefficients(env, coeff, origin + bb * direction);
    for (int it = 0; it < 60; ++it) {
        if (fa > fb) {
            hi = bb;
            bb = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = total_from_coefficients(env, coeff, origin + a * direction);
        } else {
            lo = a;
            a = bb;
            fa = fb;
            bb = lo + g * (hi - lo);
            fb = total_from_coefficients(env, coeff, origin + bb * direction);
        }
    }
    return std::max({best, fa, fb});
}

double escape_barrier(const TrapEnvironment& env, const std::vector<double>& coeff, const Vec3& minimum)
{
    const auto& beam = env.dipole_beams.front();
    const Vec3 axis = beam.axis();
    // Orthonormal basis of the radial plane.
    Vec3 e1 = axis.unitOrthogonal();
    Vec3 e2 = axis.cross(e1);
    const double u_min = total_from_coefficients(env, coeff, minimum);
    const double r_esc = 3.0 * beam.waist();

    const auto barrier_at = [&](double phi) {
        const Vec3 dir = std::cos(phi) * e1 + std::sin(phi) * e2;
        return ray_barrier(env, coeff, minimum, dir, r_esc);
    };

    constexpr int kDirections = 72;
    const double dphi = kTwoPi / kDirections;
    double best = std::numeric_limits<double>::infinity();
    int best_k = 0;
    for (int k = 0; k < kDirections; ++k) {
        const double b = barrier_at(k * dphi);
        if (b < best) {
            best = b;
            best_k = k;
        }
    }
    double lo = (best_k - 1) * dphi, hi = (best_k + 1) * dphi;
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = hi - g * (hi - lo), b = lo + g * (hi - lo);
    double fa = barrier_at(a), fb = barrier_at(b);
    for (int it = 0; it < 40; ++it) {
        if (fa < fb) {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = barrier_at(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = barrier_at(b);
        }
    }
    return std::max(0.0, std::min({best, fa, fb}) - u_min);
}

void fill_frequencies(PotentialReport& report, const Eigen::Matrix3d& hess, const Vec3& axis, double mass)
{
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(hess);
    int axial = 0;
    for (int k = 1; k < 3; ++k)
        if (std::abs(eig.eigenvectors().col(k).dot(axis)) > std::abs(eig.eigenvectors().col(axial).dot(axis)))
            axial = k;
    std::vector<int> radial;
    for (int k = 0; k < 3; ++k)
        if (k != axial)
            radial.push_back(k);
    if (eig.eigenvalues()[radial[0]] < eig.eigenvalues()[radial[1]])
        std::swap(radial[0], radial[1]);
    report.radial_omega_squared = {eig.eigenvalues()[radial[0]] / mass, eig.eigenvalues()[radial[1]] / mass};
    report.axial_omega_squared = eig.eigenvalues()[axial] / mass;
    report.principal_axes.col(0) = eig.eigenvectors().col(radial[0]);
    report.principal_axes.col(1) = eig.eigenvectors().col(radial[1]);
    report.principal_axes.col(2) = eig.eigenvectors().col(axial);
}

} // namespace

std::optional<Vec3> locate_minimum(const TrapEnvironment& env, std::string_view level)
{
    env.validate();
    return newton_minimum(env, potential_coefficients(env, env.scheme.level_index(level)));
}

PotentialReport trap_report(const TrapEnvironment& env, std::string_view level)
{
    env.validate();
    const auto idx = env.scheme.level_index(level);
    const auto coeff = potential_coefficients(env, idx);
    const auto& beam = env.dipole_beams.front();
    const double mass = env.scheme.mass();

    PotentialReport report;
    report.level = std::string(level);
    report.optical_depth = -optical_potential(env, coeff, beam.focus_position());

    const auto minimum = newton_minimum(env, coeff);
    if (!minimum) {
        report.minimum_position = beam.focus_position();
        fill_frequencies(report, hessian_from_coefficients(env, coeff, beam.focus_position()), beam.axis(), mass);
        report.depth = 0.0;
        report.is_confining = false;
        return report;
    }
    report.minimum_position = *minimum;
    fill_frequencies(report, hessian_from_coefficients(env, coeff, *minimum), beam.axis(), mass);
    report.depth = escape_barrier(env, coeff, *minimum);
    report.is_confining = report.depth > 0.0 && report.radial_omega_squared[1] > 0.0 &&
                          report.axial_omega_squared > 0.0;
    if (!report.is_confining)
        report.depth = 0.0;
    return report;
}

double analytic_radial_frequency(double depth, double mass, double waist)
{
    return std::sqrt(4.0 * depth / (mass * waist * waist));
}

Vec3 stray_displacement(const StrayField& field, double radial_frequency, double mass)
{
    if (!(radial_frequency > 0.0))
        throw std::invalid_argument("stray_displacement needs a positive confinement frequency");
    return Const::elementary_charge * field.electric_field / (mass * radial_frequency * radial_frequency);
}

Vec3 differential_stray_displacement(const StrayField& field, double frequency_a, double frequency_b, double mass)
{
    return stray_displacement(field, frequency_a, mass) - stray_displacement(field, frequency_b, mass);
}

} // namespace iontrap
