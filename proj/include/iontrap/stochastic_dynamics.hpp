#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "iontrap/random.hpp"
#include "iontrap/stark_potentials.hpp"

namespace iontrap
{

/// Classical state of one simulated ion. `level` indexes the scheme's level list.
struct IonState
{
    Vec3 position = Vec3::Zero();
    Vec3 velocity = Vec3::Zero();
    std::size_t level = 0;
    double time = 0.0;
};

/// Resonant repump laser driving lower -> upper (e.g. D3/2 -> P1/2 at 650 nm).
struct RepumpBeam
{
    GaussianBeam beam;
    std::string lower;
    std::string upper;
    double saturation_parameter = 0.0; // I/I_sat at the beam centre
    double bare_detuning = 0.0;        // rad/s, relative to the unshifted line
};

struct RepumpConfig
{
    bool enabled = false;
    std::vector<RepumpBeam> beams;
};

/// (Gamma/2) s / (1 + s + (2 delta / Gamma)^2)
double saturated_scattering_rate(double linewidth, double saturation, double detuning);

struct DynamicsOptions
{
    double steps_per_inverse_frequency = 100.0; // dt = 1 / (this * max omega)
    double heating_interval = 1e-6;              // s between ambient kicks
    double escape_radius_factor = 3.0;           // r_esc = factor * waist
    double ejection_horizon = 200e-6;            // s in a repulsive level before loss
};

/**
 * Precomputed view of a trap environment for trajectory integration:
 * per-level light-shift and scattering coefficients, trap reports and the
 * integration step.
 */
class TrapModel
{
  public:
    explicit TrapModel(TrapEnvironment env, DynamicsOptions options = {});

    [[nodiscard]] const TrapEnvironment& environment() const { return env_; }
    [[nodiscard]] const LevelScheme& scheme() const { return env_.scheme; }
    [[nodiscard]] const DynamicsOptions& options() const { return options_; }
    [[nodiscard]] double mass() const { return env_.scheme.mass(); }
    [[nodiscard]] const GaussianBeam& dipole_beam() const { return env_.dipole_beams.front(); }

    [[nodiscard]] const PotentialReport& report(std::size_t level) const { return reports_.at(level); }
    [[nodiscard]] bool is_confining(std::size_t level) const { return reports_.at(level).is_confining; }

    [[nodiscard]] double potential(std::size_t level, const Vec3& position) const;
    [[nodiscard]] double optical_potential(std::size_t level, const Vec3& position) const;
    [[nodiscard]] Vec3 acceleration(std::size_t level, const Vec3& position) const;
    /// As above; also stores the squared distance from the first beam's axis.
    [[nodiscard]] Vec3 acceleration(std::size_t level, const Vec3& position, double& radial_sq) const;
    [[nodiscard]] double scatter_rate(std::size_t level, const Vec3& position) const;
    /// Upper bound of scatter_rate over all positions (peak intensity).
    [[nodiscard]] double max_scatter_rate(std::size_t level) const;

    /// Fastest motional frequency over the long-lived levels (rad/s).
    [[nodiscard]] double max_frequency() const { return max_frequency_; }
    [[nodiscard]] double default_step() const;
    [[nodiscard]] double escape_radius() const;

    [[nodiscard]] double radial_distance(const Vec3& position) const;
    /// Kinetic energy transverse to the beam plus optical and stray-field energy.
    [[nodiscard]] double radial_energy(const IonState& state) const;
    /// Kinetic plus potential energy measured from the minimum of `reference_level`.
    [[nodiscard]] double energy(const IonState& state, std::size_t reference_level) const;

    [[nodiscard]] std::size_t sample_destination(std::size_t level, std::size_t beam, double u) const;
    [[nodiscard]] double beam_scatter_rate(std::size_t level, std::size_t beam, const Vec3& position) const;

  private:
    struct BeamCoupling
    {
        double potential = 0.0;
        double scatter = 0.0;
        double peak_intensity = 0.0;
        std::vector<std::pair<std::size_t, double>> destinations;
    };
    // Beam constants hoisted out of the integration loop.
    struct BeamGeometry
    {
        Vec3 focus;
        Vec3 axis;
        double waist_sq;
        double inv_rayleigh_sq;
        double peak_intensity;
    };

    TrapEnvironment env_;
    DynamicsOptions options_;
    std::vector<std::vector<BeamCoupling>> coupling_; // [level][beam]
    std::vector<BeamGeometry> geometry_;
    std::vector<PotentialReport> reports_;
    double max_frequency_ = 0.0;
    double axial_omega_sq_ = 0.0;
    double inv_mass_ = 0.0;
    Vec3 stray_force_ = Vec3::Zero();
};

struct TrialOutcome
{
    bool survived = true;
    std::optional<double> escape_time;
    int scatter_count = 0;
    int d_visits = 0;
    double final_energy = 0.0; // J, from the initial level's minimum
};

struct SurvivalCurve
{
    std::vector<double> durations; // s (or the scan variable of a depth scan)
    std::vector<int> successes;
    std::vector<int> trials;
    std::vector<double> interval_lo;
    std::vector<double> interval_hi;

    [[nodiscard]] double probability(std::size_t i) const
    {
        return static_cast<double>(successes.at(i)) / trials.at(i);
    }
};

IonState sample_thermal_state(const TrapModel& model, std::size_t level, double temperature, Rng& rng);
IonState sample_thermal_state(const TrapModel& model, std::size_t level, double temperature,
                              std::uint64_t rng_seed);

/// One velocity-Verlet step in the state's level. Throws if dt exceeds 1/(50 max omega).
IonState integrate_step(const IonState& state, const TrapModel& model, double dt);

struct ScatterSearch
{
    double waiting_time; // s; infinity when no event occurs before the horizon
    IonState state;      // ion state at the event (or at the horizon)
};
/// Waiting time to the next photon scattering along the ion's trajectory,
/// sampled exactly by thinning against the peak rate.
ScatterSearch next_scatter_time(const IonState& state, const TrapModel& model, Rng& rng, double horizon);

/// Absorption recoil along the beam axis, isotropic emission recoil, then decay branching.
IonState apply_scatter(const IonState& state, const TrapModel& model, Rng& rng);

double recoil_energy(double wavelength, double mass);

/// Instantaneous repump rate out of the state's (D) level at its position.
double repump_rate(const IonState& state, const TrapModel& model, const RepumpConfig& repump);

struct RepumpResult
{
    IonState state;
    int cycles = 0;
    bool escaped = false;
};
/**
 * Pump a D-level ion back to S1/2: draw the dwell time by thinning while the
 * ion moves in the D potential, absorb and re-emit a repump photon, decay via
 * the P branching; repeat until the ion reaches a level with no repump line.
 * Stops early at `horizon` (s after state.time) or on escape.
 */
RepumpResult repump_step(const IonState& state, const TrapModel& model, const RepumpConfig& repump, Rng& rng,
                         double horizon);

/// Isotropic Gaussian velocity kicks giving <dE/dt> = 3 k_B rate (dT/dt = rate for a trapped ensemble).
IonState ambient_heating_kick(const IonState& state, double mass, double rate, double dt, Rng& rng);

/// Optional phase before the hold, e.g. a delay at different power with extra heating.
struct PreHoldPlan
{
    std::shared_ptr<const TrapModel> model;
    double duration = 0.0;
    double ambient_heating = 0.0; // K/s
    bool reset_level = true;      // return to the initial level at handover
};

struct TrialPlan
{
    std::shared_ptr<const TrapModel> model;
    std::optional<PreHoldPlan> pre_hold;
    std::size_t initial_level = 0;
    double initial_temperature = 300e-6;
    double hold_duration = 0.0;
    double ambient_heating = 0.0; // K/s
    RepumpConfig repump;
    double step = 0.0; // s; 0 uses the model default
};

/// Map a state between two traps by rescaling mode amplitudes (thermal distributions map onto each other).
IonState transfer_state(const IonState& state, const TrapModel& from, const TrapModel& to);

TrialOutcome run_trial(const TrialPlan& plan, std::uint64_t seed);
TrialOutcome run_trial(const TrialPlan& plan, Rng& rng);

/// Independent trials per scan point; point k uses plans[k] and substreams (seed, k, trial).
SurvivalCurve survival_scan(const std::vector<TrialPlan>& plans, const std::vector<double>& x, int n_trials,
                            std::uint64_t master_seed, unsigned threads = 0);
SurvivalCurve survival_curve(const TrialPlan& plan, const std::vector<double>& durations, int n_trials,
                             std::uint64_t master_seed, unsigned threads = 0);

/// Mean energy gain per unit time over an ensemble, <dE/dt>/k_B in K/s.
struct HeatingMeasurement
{
    double rate;        // mean energy gain per second over k_B, K/s
    double rate_sigma;  // K/s
    long scatter_events;
};
HeatingMeasurement measure_heating(const TrialPlan& plan, int n_ions, std::uint64_t master_seed,
                                   unsigned threads = 0);

} // namespace iontrap
