#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "iontrap/stark_potentials.hpp"
#include "test_support.hpp"

using namespace iontrap;
using namespace iontrap::test;
using doctest::Approx;

namespace
{

TrapEnvironment zero_stray(TrapEnvironment env)
{
    env.stray = StrayField();
    return env;
}

TrapEnvironment scaled_power(TrapEnvironment env, double factor)
{
    auto& b = env.dipole_beams.front();
    b = b.with_power(b.power() * factor);
    return env;
}

} // namespace

TEST_SUITE("stark_potentials")
{
    TEST_CASE("VIS ground-state depth is about 8 mK")
    {
        const auto env = vis_env();
        const double u = dipole_potential(env, "S1/2", Vec3::Zero());
        CHECK(u < 0.0);
        CHECK(to_mk(-u) == Approx(8.0).epsilon(0.05));
        const auto rep = trap_report(env, "S1/2");
        CHECK(rep.optical_depth == Approx(-u).epsilon(1e-12));
        CHECK(rep.is_confining);
    }

    TEST_CASE("NIR D3/2 is attractive at about 3 mK")
    {
        const auto env = nir_env();
        CHECK(dipole_potential(env, "D3/2", Vec3::Zero()) < 0.0);
        const auto rep = trap_report(env, "D3/2");
        CHECK(rep.is_confining);
        CHECK(to_mk(rep.depth) == Approx(3.0).epsilon(0.2));
        const auto ground = trap_report(env, "S1/2");
        CHECK(rep.optical_depth / ground.optical_depth == Approx(1.0 / 5.0).epsilon(0.4));
    }

    TEST_CASE("zero intensity gives zero potential and scattering")
    {
        auto env = scaled_power(vis_env(), 0.0);
        for (const auto& lv : env.scheme.levels()) {
            CHECK(dipole_potential(env, lv.name, Vec3(1e-7, 0, 0)) == 0.0);
            CHECK(scattering_rate(env, lv.name, Vec3::Zero()) == 0.0);
            CHECK(trap_report(env, lv.name).depth == 0.0);
        }
    }

    TEST_CASE("off-resonant scattering rates")
    {
        CHECK(scattering_rate(vis_env(), "S1/2", Vec3::Zero()) == Approx(200.0).epsilon(0.4));
        const double nir = scattering_rate(nir_env(), "S1/2", Vec3::Zero());
        CHECK(nir > 7.3 - 3.0);
        CHECK(nir < 7.3 + 3.0);
    }

    TEST_CASE("branch-resolved rates sum to the total")
    {
        const auto env = vis_env();
        const auto rates = branch_resolved_rates(env, "S1/2", Vec3::Zero());
        const double total = scattering_rate(env, "S1/2", Vec3::Zero());
        double sum = 0.0;
        for (const auto& [dest, r] : rates)
            sum += r;
        CHECK(sum == Approx(total).epsilon(1e-9));
        const double to_d = rates.at("D3/2") + rates.at("D5/2");
        CHECK(to_d / total == Approx(0.25).epsilon(1e-9));
        // 43 Hz lies within 40 % of the model D-rate.
        CHECK(to_d == Approx(43.0).epsilon(0.4));
    }

    TEST_CASE("closed cycle keeps every scattered photon in S1/2")
    {
        auto env = vis_env();
        env.scheme = builtin_barium({1.0, 1.0, 0.0, 0.0});
        const auto rates = branch_resolved_rates(env, "S1/2", Vec3::Zero());
        CHECK(rates.at("S1/2") == Approx(scattering_rate(env, "S1/2", Vec3::Zero())));
        CHECK(rates.count("D3/2") == 0);
    }

    TEST_CASE("secular frequencies")
    {
        const auto vis = trap_report(vis_env(), "S1/2");
        CHECK(vis.radial_frequency(0) / kTwoPi == Approx(80e3).epsilon(0.15));
        CHECK(vis.radial_frequency(1) / kTwoPi == Approx(80e3).epsilon(0.15));
        const auto nir = trap_report(nir_env(), "S1/2");
        CHECK(nir.radial_frequency(0) / kTwoPi == Approx(60e3).epsilon(0.15));
        CHECK(vis.axial_frequency() > 0.0);
    }

    TEST_CASE("VIS D3/2 is repulsive with signed curvature")
    {
        const auto rep = trap_report(vis_env(), "D3/2");
        CHECK_FALSE(rep.is_confining);
        CHECK(rep.depth == 0.0);
        CHECK(rep.radial_omega_squared[0] < 0.0);
        CHECK(rep.radial_omega_squared[1] < 0.0);
        // Weaker than the S1/2 curvature by the ratio of light shifts.
        const double f = -rep.radial_frequency(1) / kTwoPi;
        CHECK(f > 20e3);
        CHECK(f < 45e3);
    }

    TEST_CASE("sign rule across wavelengths")
    {
        const auto vis = vis_env();
        CHECK(dipole_potential(vis, "S1/2", Vec3::Zero()) < 0.0);
        CHECK(dipole_potential(vis, "D3/2", Vec3::Zero()) > 0.0);
        CHECK(dipole_potential(vis, "D5/2", Vec3::Zero()) > 0.0);
        const auto nir = nir_env();
        for (const char* lv : {"S1/2", "D3/2", "D5/2"})
            CHECK(dipole_potential(nir, lv, Vec3::Zero()) < 0.0);

        const auto& scheme = vis.scheme;
        for (const auto& line : scheme.lines()) {
            const auto lower = scheme.level_index(line.lower);
            for (double lambda : {532e-9, 1064e-9}) {
                const auto s = line_shift(scheme, line, lower, lambda);
                if (s.detuning < 0.0)
                    CHECK(s.rotating_potential_per_intensity < 0.0);
                else
                    CHECK(s.rotating_potential_per_intensity > 0.0);
            }
        }
    }

    TEST_CASE("per-line scattering follows the rotating-term light shift")
    {
        const double inf = std::numeric_limits<double>::infinity();
        const double e1 = wavenumber_to_joule(20000.0);
        const LevelScheme toy("toy", 1e-25, {{"g", 0.0, inf, 0.5}, {"e", e1, 1e-8, 0.5}},
                              {{"e", "g", 500e-9, 1e8, 1.0}});
        const auto& line = toy.lines().front();
        for (double lambda : {532e-9, 700e-9, 1064e-9, 400e-9}) {
            const auto s = line_shift(toy, line, 0, lambda);
            const double w0 = toy.transition_frequency(line);
            const double wl = wavelength_to_angular_frequency(lambda);
            const double expected = std::pow(wl / w0, 3) * 1e8 * std::abs(s.rotating_potential_per_intensity) /
                                    (Const::planck_reduced * std::abs(s.detuning));
            CHECK(s.scatter_per_intensity == Approx(expected).epsilon(1e-12));
            const auto upper = line_shift(toy, line, 1, lambda);
            CHECK(upper.potential_per_intensity == Approx(-s.potential_per_intensity).epsilon(1e-12));
            CHECK(upper.scatter_per_intensity == 0.0);
        }
        CHECK_THROWS_AS(line_shift(toy, line, 0, 500e-9), std::invalid_argument);
    }

    TEST_CASE("Hessian frequency matches the analytic Gaussian well")
    {
        for (const auto& env : {zero_stray(vis_env()), zero_stray(nir_env())}) {
            const auto rep = trap_report(env, "S1/2");
            const double analytic =
                analytic_radial_frequency(rep.optical_depth, env.scheme.mass(), env.dipole_beams.front().waist());
            CHECK(rep.radial_frequency(0) == Approx(analytic).epsilon(0.02));
            CHECK(rep.radial_frequency(1) == Approx(analytic).epsilon(0.02));
            CHECK(rep.depth == Approx(rep.optical_depth).epsilon(1e-3));
        }
    }

    TEST_CASE("stray field lowers the barrier monotonically")
    {
        const auto base = vis_env();
        double prev = std::numeric_limits<double>::infinity();
        for (double e : {0.0, 1e-3, 5e-3, 1e-2, 3e-2, 0.1}) {
            const auto rep = trap_report(with_stray(base, Vec3(e, 0, 0)), "S1/2");
            CHECK(rep.depth < prev + 1e-30);
            prev = rep.depth;
        }
        const auto tiny = trap_report(with_stray(base, Vec3(1e-6, 0, 0)), "S1/2");
        CHECK(tiny.depth == Approx(tiny.optical_depth).epsilon(1e-3));
        const auto tilted = trap_report(with_stray(base, Vec3(0, 1e-2, 0)), "S1/2");
        CHECK(tilted.minimum_position.y() > 0.0);
    }

    TEST_CASE("potential is linear in power")
    {
        const auto env = vis_env();
        const Vec3 p(0.4e-6, -0.3e-6, 2e-6);
        for (const auto& lv : env.scheme.levels()) {
            const double u1 = dipole_potential(env, lv.name, p);
            CHECK(dipole_potential(scaled_power(env, 2.5), lv.name, p) == Approx(2.5 * u1).epsilon(1e-12));
        }
    }

    TEST_CASE("total force is minus the potential gradient")
    {
        const auto env = vis_env();
        const Vec3 p(0.5e-6, 0.2e-6, 3e-6);
        const Vec3 f = total_force(env, "S1/2", p);
        for (int k = 0; k < 3; ++k) {
            Vec3 h = Vec3::Zero();
            h[k] = 1e-11;
            const double fd =
                -(total_potential(env, "S1/2", p + h) - total_potential(env, "S1/2", p - h)) / (2.0 * h[k]);
            CHECK(f[k] == Approx(fd).epsilon(1e-5));
        }
    }

    TEST_CASE("stray displacement")
    {
        const double m = builtin_barium().mass();
        const StrayField e(Vec3(1e-2, 0, 0));
        CHECK(stray_displacement(e, kTwoPi * 14e3, m).x() == Approx(0.904e-6).epsilon(2e-3));
        CHECK(stray_displacement(e, kTwoPi * 140e3, m).x() == Approx(9.04e-9).epsilon(2e-3));
        CHECK(differential_stray_displacement(e, kTwoPi * 14e3, kTwoPi * 140e3, m).norm() ==
              Approx(0.895e-6).epsilon(2e-3));
        CHECK(stray_displacement(StrayField(), kTwoPi * 14e3, m).norm() == 0.0);
        CHECK_THROWS_AS(stray_displacement(e, 0.0, m), std::invalid_argument);
    }

    TEST_CASE("environment validation")
    {
        CHECK_THROWS_AS(StrayField(Vec3(10.0, 0, 0)), std::invalid_argument);
        auto env = vis_env();
        env.calibration_factor = 2.5;
        CHECK_THROWS_AS(env.validate(), std::invalid_argument);
        env = vis_env();
        env.dipole_beams.clear();
        CHECK_THROWS_AS(env.validate(), std::invalid_argument);
        env = vis_env();
        env.polarizability_overrides_au["X"] = 100.0;
        CHECK_THROWS_AS(env.validate(), std::invalid_argument);
        CHECK_THROWS_AS(dipole_potential(vis_env(), "F7/2", Vec3::Zero()), std::invalid_argument);
    }

    TEST_CASE("polarizability override replaces the line sum")
    {
        auto env = zero_stray(nir_env());
        env.polarizability_overrides_au["D3/2"] = 200.0;
        const double i0 = peak_intensity(env.dipole_beams.front());
        const double expected = -200.0 * Const::atomic_unit_polarizability /
                                (2.0 * Const::vacuum_permittivity * Const::speed_of_light) * i0;
        CHECK(dipole_potential(env, "D3/2", Vec3::Zero()) == Approx(expected).epsilon(1e-12));
        CHECK(dipole_potential(env, "S1/2", Vec3::Zero()) ==
              Approx(dipole_potential(zero_stray(nir_env()), "S1/2", Vec3::Zero())));
    }

    TEST_CASE("calibration scales potential and scattering")
    {
        auto env = vis_env();
        const double u = dipole_potential(env, "S1/2", Vec3::Zero());
        const double g = scattering_rate(env, "S1/2", Vec3::Zero());
        env.calibration_factor = 1.2;
        CHECK(dipole_potential(env, "S1/2", Vec3::Zero()) == Approx(1.2 * u));
        CHECK(scattering_rate(env, "S1/2", Vec3::Zero()) == Approx(1.2 * g));
    }
}
