#include "iontrap/stochastic_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "iontrap/constants.hpp"
#include "iontrap/thermometry_fits.hpp"

namespace iontrap
{

namespace
{

constexpr double kInf = std::numeric_limits<double>::infinity();

Vec3 isotropic_unit(Rng& rng)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> phi(0.0, kTwoPi);
    const double cz = u(rng);
    const double sz = std::sqrt(std::max(0.0, 1.0 - cz * cz));
    const double p = phi(rng);
    return {sz * std::cos(p), sz * std::sin(p), cz};
}

double draw_exponential(Rng& rng, double rate)
{
    if (!(rate > 0.0))
        return kInf;
    return std::exponential_distribution<double>(rate)(rng);
}

double uniform01(Rng& rng)
{
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

} // namespace

double saturated_scattering_rate(double linewidth, double saturation, double detuning)
{
    if (saturation < 0.0)
        throw std::invalid_argument("saturation parameter must be >= 0");
    const double x = 2.0 * detuning / linewidth;
    return 0.5 * linewidth * saturation / (1.0 + saturation + x * x);
}

double recoil_energy(double wavelength, double mass)
{
    return Const::planck * Const::planck / (2.0 * mass * wavelength * wavelength);
}

// ---------------------------------------------------------------------------
// TrapModel
// ---------------------------------------------------------------------------

TrapModel::TrapModel(TrapEnvironment env, DynamicsOptions options)
    : env_(std::move(env))
    , options_(options)
{
    env_.validate();
    const auto n_levels = env_.scheme.levels().size();
    coupling_.resize(n_levels);
    for (std::size_t lv = 0; lv < n_levels; ++lv) {
        for (std::size_t b = 0; b < env_.dipole_beams.size(); ++b) {
            const auto resp = optical_response(env_, lv, b);
            coupling_[lv].push_back(
                {resp.potential_per_intensity, resp.scatter_per_intensity, iontrap::peak_intensity(env_.dipole_beams[b]),
                 resp.destinations});
        }
        reports_.push_back(trap_report(env_, env_.scheme.levels()[lv].name));
    }
    for (const auto& beam : env_.dipole_beams) {
        const double zr = rayleigh_range(beam);
        geometry_.push_back({beam.focus_position(), beam.axis(), beam.waist() * beam.waist(), 1.0 / (zr * zr),
                             iontrap::peak_intensity(beam)});
    }
    axial_omega_sq_ = env_.axial_frequency * env_.axial_frequency;
    stray_force_ = Const::elementary_charge * env_.stray.electric_field;
    inv_mass_ = 1.0 / mass();

    max_frequency_ = env_.axial_frequency;
    for (std::size_t lv = 0; lv < n_levels; ++lv) {
        if (!env_.scheme.levels()[lv].is_long_lived())
            continue;
        const auto& r = reports_[lv];
        max_frequency_ = std::max({max_frequency_, std::abs(r.radial_frequency(0)), std::abs(r.radial_frequency(1)),
                                   std::abs(r.axial_frequency())});
    }
}

double TrapModel::default_step() const
{
    // Force-free model: any step is exact, this only sets the escape-check spacing.
    if (!(max_frequency_ > 0.0))
        return 1e-5;
    return 1.0 / (options_.steps_per_inverse_frequency * max_frequency_);
}

double TrapModel::escape_radius() const
{
    return options_.escape_radius_factor * dipole_beam().waist();
}

double TrapModel::optical_potential(std::size_t level, const Vec3& position) const
{
    double u = 0.0;
    const auto& cpl = coupling_[level];
    for (std::size_t b = 0; b < cpl.size(); ++b)
        u += cpl[b].potential * intensity_at(env_.dipole_beams[b], position);
    return u;
}

double TrapModel::potential(std::size_t level, const Vec3& position) const
{
    return optical_potential(level, position) + 0.5 * mass() * axial_omega_sq_ * position.z() * position.z() -
           stray_force_.dot(position);
}

Vec3 TrapModel::acceleration(std::size_t level, const Vec3& position) const
{
    double radial_sq = 0.0;
    return acceleration(level, position, radial_sq);
}

Vec3 TrapModel::acceleration(std::size_t level, const Vec3& position, double& radial_sq) const
{
    Vec3 f = stray_force_;
    f.z() -= mass() * axial_omega_sq_ * position.z();
    const auto& cpl = coupling_[level];
    for (std::size_t b = 0; b < cpl.size(); ++b) {
        const auto& g = geometry_[b];
        const Vec3 d = position - g.focus;
        const double axial = d.dot(g.axis);
        const Vec3 radial = d - axial * g.axis;
        const double rsq = radial.squaredNorm();
        if (b == 0)
            radial_sq = rsq;
        if (cpl[b].potential == 0.0)
            continue;
        const double inv_q = 1.0 / (1.0 + axial * axial * g.inv_rayleigh_sq);
        const double inv_wsq = inv_q / g.waist_sq;
        const double intensity = g.peak_intensity * inv_q * std::exp(-2.0 * rsq * inv_wsq);
        const double dlni_dz = (2.0 * rsq * inv_wsq - 1.0) * inv_wsq * 2.0 * g.waist_sq * axial * g.inv_rayleigh_sq;
        f += (cpl[b].potential * intensity) * ((4.0 * inv_wsq) * radial - dlni_dz * g.axis);
    }
    return f * inv_mass_;
}

double TrapModel::beam_scatter_rate(std::size_t level, std::size_t beam, const Vec3& position) const
{
    const auto& c = coupling_[level][beam];
    return c.scatter > 0.0 ? c.scatter * intensity_at(env_.dipole_beams[beam], position) : 0.0;
}

double TrapModel::scatter_rate(std::size_t level, const Vec3& position) const
{
    double r = 0.0;
    for (std::size_t b = 0; b < coupling_[level].size(); ++b)
        r += beam_scatter_rate(level, b, position);
    return r;
}

double TrapModel::max_scatter_rate(std::size_t level) const
{
    double r = 0.0;
    for (const auto& c : coupling_[level])
        r += c.scatter * c.peak_intensity;
    return r;
}

std::size_t TrapModel::sample_destination(std::size_t level, std::size_t beam, double u) const
{
    const auto& dest = coupling_[level][beam].destinations;
    double acc = 0.0;
    for (const auto& [lv, p] : dest) {
        acc += p;
        if (u < acc)
            return lv;
    }
    return dest.empty() ? level : dest.back().first;
}

double TrapModel::radial_distance(const Vec3& position) const
{
    const auto& g = geometry_.front();
    const Vec3 d = position - g.focus;
    return (d - d.dot(g.axis) * g.axis).norm();
}

double TrapModel::radial_energy(const IonState& state) const
{
    const auto& axis = dipole_beam().axis();
    const Vec3 v_perp = state.velocity - state.velocity.dot(axis) * axis;
    const Vec3 r_perp = dipole_beam().local(state.position).radial;
    return 0.5 * mass() * v_perp.squaredNorm() + optical_potential(state.level, state.position) -
           stray_force_.dot(r_perp);
}

double TrapModel::energy(const IonState& state, std::size_t reference_level) const
{
    const auto& ref = reports_.at(reference_level);
    return 0.5 * mass() * state.velocity.squaredNorm() + potential(state.level, state.position) -
           potential(reference_level, ref.minimum_position);
}

// ---------------------------------------------------------------------------
// Single-step operations
// ---------------------------------------------------------------------------

IonState sample_thermal_state(const TrapModel& model, std::size_t level, double temperature, Rng& rng)
{
    if (temperature < 0.0)
        throw std::invalid_argument("temperature must be >= 0");
    const auto& rep = model.report(level);
    if (!rep.is_confining)
        throw std::invalid_argument("cannot sample a thermal state in non-confining level " + rep.level);

    IonState s;
    s.level = level;
    s.position = rep.minimum_position;
    if (temperature == 0.0)
        return s;
    const double kt = Const::boltzmann * temperature;
    const double m = model.mass();
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::array<double, 3> w2{rep.radial_omega_squared[0], rep.radial_omega_squared[1],
                                   rep.axial_omega_squared};
    for (int k = 0; k < 3; ++k)
        s.position += rep.principal_axes.col(k) * (normal(rng) * std::sqrt(kt / (m * w2[k])));
    const double sv = std::sqrt(kt / m);
    for (int k = 0; k < 3; ++k)
        s.velocity[k] = normal(rng) * sv;
    return s;
}

IonState sample_thermal_state(const TrapModel& model, std::size_t level, double temperature, std::uint64_t rng_seed)
{
    Rng rng(rng_seed);
    return sample_thermal_state(model, level, temperature, rng);
}

IonState integrate_step(const IonState& state, const TrapModel& model, double dt)
{
    if (!(dt >= 0.0))
        throw std::invalid_argument("integration step must be >= 0");
    if (model.max_frequency() > 0.0 && dt > 1.0 / (50.0 * model.max_frequency()))
        throw std::invalid_argument("integration step exceeds 1/(50 max omega); motion would be under-resolved");
    IonState s = state;
    const Vec3 a0 = model.acceleration(s.level, s.position);
    s.velocity += 0.5 * dt * a0;
    s.position += dt * s.velocity;
    s.velocity += 0.5 * dt * model.acceleration(s.level, s.position);
    s.time += dt;
    return s;
}

IonState apply_scatter(const IonState& state, const TrapModel& model, Rng& rng)
{
    IonState s = state;
    const auto& beams = model.environment().dipole_beams;
    std::size_t beam = 0;
    if (beams.size() > 1) {
        double total = model.scatter_rate(s.level, s.position);
        double pick = uniform01(rng) * total;
        for (beam = 0; beam + 1 < beams.size(); ++beam) {
            pick -= model.beam_scatter_rate(s.level, beam, s.position);
            if (pick < 0.0)
                break;
        }
    }
    const double dv = kTwoPi * Const::planck_reduced / (beams[beam].wavelength() * model.mass());
    s.velocity += dv * beams[beam].axis();
    s.velocity += dv * isotropic_unit(rng);
    s.level = model.sample_destination(s.level, beam, uniform01(rng));
    return s;
}

IonState ambient_heating_kick(const IonState& state, double mass, double rate, double dt, Rng& rng)
{
    if (rate < 0.0)
        throw std::invalid_argument("heating rate must be >= 0");
    IonState s = state;
    if (rate == 0.0 || dt <= 0.0)
        return s;
    const double sigma = std::sqrt(2.0 * Const::boltzmann * rate * dt / mass);
    std::normal_distribution<double> normal(0.0, sigma);
    for (int k = 0; k < 3; ++k)
        s.velocity[k] += normal(rng);
    return s;
}

double repump_rate(const IonState& state, const TrapModel& model, const RepumpConfig& repump)
{
    if (!repump.enabled)
        return 0.0;
    const auto& scheme = model.scheme();
    const auto& level_name = scheme.levels()[state.level].name;
    double rate = 0.0;
    for (const auto& rb : repump.beams) {
        if (rb.lower != level_name)
            continue;
        const auto upper = scheme.level_index(rb.upper);
        const double gamma = 1.0 / scheme.levels()[upper].lifetime;
        const double s = rb.saturation_parameter * intensity_at(rb.beam, state.position) / peak_intensity(rb.beam);
        const double shift = (model.optical_potential(upper, state.position) -
                              model.optical_potential(state.level, state.position)) /
                             Const::planck_reduced;
        rate += saturated_scattering_rate(gamma, s, rb.bare_detuning - shift);
    }
    return rate;
}

// ---------------------------------------------------------------------------
// Trajectory propagation
// ---------------------------------------------------------------------------

namespace
{

/// Moves one ion forward in time with optional ambient heating, watching for escape.
class Evolution
{
  public:
    Evolution(const TrapModel& model, Rng& rng, IonState state, double step, double heating_rate)
        : model_(model)
        , rng_(rng)
        , state_(std::move(state))
        , step_(step)
        , heating_rate_(heating_rate)
        , heating_interval_(model.options().heating_interval)
        , escape_radius_sq_(model.escape_radius() * model.escape_radius())
    {
        next_heat_ = state_.time + heating_interval_;
        set_level(state_.level);
    }

    [[nodiscard]] const IonState& state() const { return state_; }
    [[nodiscard]] double time() const { return state_.time; }
    [[nodiscard]] bool escaped() const { return escaped_; }

    void set_level(std::size_t level)
    {
        if (level != state_.level || !initialised_) {
            level_entered_ = state_.time;
            confining_ = model_.is_confining(level);
        }
        initialised_ = true;
        state_.level = level;
        acc_ = model_.acceleration(level, state_.position, radial_sq_);
    }

    void replace_state(const IonState& s)
    {
        const bool level_changed = s.level != state_.level;
        state_ = s;
        if (level_changed) {
            level_entered_ = state_.time;
            confining_ = model_.is_confining(s.level);
        }
        acc_ = model_.acceleration(s.level, s.position, radial_sq_);
    }

    void kick_velocity(const Vec3& dv) { state_.velocity += dv; }

    /// Integrate up to `target`. Returns false on escape.
    bool advance(double target)
    {
        while (state_.time < target) {
            double h = target - state_.time;
            bool land = true;
            if (h > step_) {
                h = step_;
                land = false;
            }
            bool heat = false;
            if (heating_rate_ > 0.0 && next_heat_ - state_.time <= h) {
                h = next_heat_ - state_.time;
                heat = true;
                land = false;
            }
            if (h > 0.0) {
                state_.velocity += 0.5 * h * acc_;
                state_.position += h * state_.velocity;
                acc_ = model_.acceleration(state_.level, state_.position, radial_sq_);
                state_.velocity += 0.5 * h * acc_;
            }
            if (land)
                state_.time = target;
            else if (heat)
                state_.time = next_heat_;
            else
                state_.time += h;
            if (heat) {
                state_ = ambient_heating_kick(state_, model_.mass(), heating_rate_, heating_interval_, rng_);
                next_heat_ += heating_interval_;
            }
            if (check_escape())
                return false;
        }
        return true;
    }

  private:
    bool check_escape()
    {
        if (radial_sq_ > escape_radius_sq_) {
            escaped_ = true;
            return true;
        }
        if (!confining_ && state_.time - level_entered_ > model_.options().ejection_horizon &&
            model_.radial_energy(state_) > 0.0) {
            escaped_ = true;
            return true;
        }
        return false;
    }

    const TrapModel& model_;
    Rng& rng_;
    IonState state_;
    Vec3 acc_ = Vec3::Zero();
    double step_;
    double heating_rate_;
    double heating_interval_;
    double next_heat_ = 0.0;
    double escape_radius_sq_;
    double radial_sq_ = 0.0;
    double level_entered_ = 0.0;
    bool confining_ = true;
    bool initialised_ = false;
    bool escaped_ = false;
};

struct RepumpChannel
{
    const RepumpBeam* beam;
    std::size_t upper;
    double bound;
};

std::vector<RepumpChannel> repump_channels(const TrapModel& model, const RepumpConfig& repump, std::size_t level)
{
    std::vector<RepumpChannel> out;
    if (!repump.enabled)
        return out;
    const auto& scheme = model.scheme();
    const auto& name = scheme.levels()[level].name;
    for (const auto& rb : repump.beams) {
        if (rb.lower != name)
            continue;
        const auto upper = scheme.level_index(rb.upper);
        const double gamma = 1.0 / scheme.levels()[upper].lifetime;
        const double s = rb.saturation_parameter;
        out.push_back({&rb, upper, 0.5 * gamma * s / (1.0 + s)});
    }
    return out;
}

std::size_t sample_decay(const LevelScheme& scheme, std::size_t upper, double u)
{
    const auto& name = scheme.levels()[upper].name;
    double acc = 0.0;
    std::size_t last = upper;
    for (const auto& l : scheme.lines()) {
        if (l.upper != name)
            continue;
        last = scheme.level_index(l.lower);
        acc += l.branching_fraction;
        if (u < acc)
            return last;
    }
    return last;
}

/// Repump cycles until the level has no repump channel, the end time, or escape.
int repump_cycles(Evolution& ev, const TrapModel& model, const RepumpConfig& repump, Rng& rng, double end)
{
    int cycles = 0;
    while (!ev.escaped() && ev.time() < end) {
        const auto channels = repump_channels(model, repump, ev.state().level);
        if (channels.empty())
            break;
        double bound = 0.0;
        for (const auto& c : channels)
            bound += c.bound;
        const double candidate = ev.time() + draw_exponential(rng, bound);
        if (!ev.advance(std::min(candidate, end)) || ev.time() >= end)
            break;
        // Accept against the local rate; pick the channel in proportion to its rate.
        double pick = uniform01(rng) * bound;
        const RepumpChannel* chosen = nullptr;
        for (const auto& c : channels) {
            IonState probe = ev.state();
            RepumpConfig single{true, {*c.beam}};
            pick -= repump_rate(probe, model, single);
            if (pick < 0.0) {
                chosen = &c;
                break;
            }
        }
        if (!chosen)
            continue;
        const double dv = kTwoPi * Const::planck_reduced / (chosen->beam->beam.wavelength() * model.mass());
        ev.kick_velocity(dv * chosen->beam->beam.axis());
        ev.kick_velocity(dv * isotropic_unit(rng));
        ev.set_level(sample_decay(model.scheme(), chosen->upper, uniform01(rng)));
        ++cycles;
    }
    return cycles;
}

double resolve_step(double requested, const TrapModel& model)
{
    if (requested < 0.0)
        throw std::invalid_argument("integration step must be >= 0");
    if (requested == 0.0)
        return model.default_step();
    if (model.max_frequency() > 0.0 && requested > 1.0 / (50.0 * model.max_frequency()))
        throw std::invalid_argument("integration step exceeds 1/(50 max omega); motion would be under-resolved");
    return requested;
}

struct PhaseCounters
{
    int scatter_count = 0;
    int d_visits = 0;
};

/// Hold phase: dipole scattering, repumping and ambient heating for `duration`.
bool run_phase(Evolution& ev, const TrapModel& model, const RepumpConfig& repump, Rng& rng, double duration,
               std::size_t ground, PhaseCounters& counters)
{
    const double end = ev.time() + duration;
    while (ev.time() < end) {
        const auto level = ev.state().level;
        if (level != ground && !repump_channels(model, repump, level).empty()) {
            repump_cycles(ev, model, repump, rng, end);
            if (ev.escaped())
                return false;
            continue;
        }
        const double bound = model.max_scatter_rate(level);
        const double candidate = ev.time() + draw_exponential(rng, bound);
        if (!ev.advance(std::min(candidate, end)))
            return false;
        if (ev.time() >= end)
            break;
        if (uniform01(rng) * bound < model.scatter_rate(level, ev.state().position)) {
            const IonState after = apply_scatter(ev.state(), model, rng);
            ++counters.scatter_count;
            if (after.level != level && after.level != ground)
                ++counters.d_visits;
            ev.replace_state(after);
        }
    }
    return true;
}

} // namespace

ScatterSearch next_scatter_time(const IonState& state, const TrapModel& model, Rng& rng, double horizon)
{
    Evolution ev(model, rng, state, model.default_step(), 0.0);
    const double start = state.time;
    const double end = start + horizon;
    const double bound = model.max_scatter_rate(state.level);
    while (true) {
        const double candidate = ev.time() + draw_exponential(rng, bound);
        if (candidate > end) {
            ev.advance(end);
            return {kInf, ev.state()};
        }
        if (!ev.advance(candidate))
            return {kInf, ev.state()};
        if (uniform01(rng) * bound < model.scatter_rate(state.level, ev.state().position))
            return {ev.time() - start, ev.state()};
    }
}

RepumpResult repump_step(const IonState& state, const TrapModel& model, const RepumpConfig& repump, Rng& rng,
                         double horizon)
{
    if (!repump.enabled)
        throw std::invalid_argument("repump_step called with repumping disabled");
    if (repump_channels(model, repump, state.level).empty())
        throw std::invalid_argument("repump_step: level " + model.scheme().levels()[state.level].name +
                                    " has no repump line");
    Evolution ev(model, rng, state, model.default_step(), 0.0);
    RepumpResult out;
    out.cycles = repump_cycles(ev, model, repump, rng, state.time + horizon);
    out.state = ev.state();
    out.escaped = ev.escaped();
    return out;
}

IonState transfer_state(const IonState& state, const TrapModel& from, const TrapModel& to)
{
    const auto& rf = from.report(state.level);
    const auto& rt = to.report(state.level);
    if (!rf.is_confining || !rt.is_confining)
        return state;
    IonState s = state;
    const Vec3 d = state.position - rf.minimum_position;
    const std::array<double, 3> wf{rf.radial_omega_squared[0], rf.radial_omega_squared[1], rf.axial_omega_squared};
    const std::array<double, 3> wt{rt.radial_omega_squared[0], rt.radial_omega_squared[1], rt.axial_omega_squared};
    s.position = rt.minimum_position;
    for (int k = 0; k < 3; ++k) {
        const Vec3 axis = rf.principal_axes.col(k);
        s.position += axis * (d.dot(axis) * std::sqrt(wf[k] / wt[k]));
    }
    return s;
}

TrialOutcome run_trial(const TrialPlan& plan, Rng& rng)
{
    if (!plan.model)
        throw std::invalid_argument("trial plan has no trap model");
    if (plan.hold_duration < 0.0)
        throw std::invalid_argument("hold duration must be >= 0");
    const auto& model = *plan.model;
    const std::size_t ground = plan.initial_level;
    TrialOutcome out;
    PhaseCounters counters;

    IonState state;
    if (plan.pre_hold && plan.pre_hold->duration > 0.0) {
        const auto& pre = *plan.pre_hold;
        state = sample_thermal_state(*pre.model, plan.initial_level, plan.initial_temperature, rng);
        const double step = resolve_step(plan.step, *pre.model);
        Evolution ev(*pre.model, rng, state, step, pre.ambient_heating);
        if (!run_phase(ev, *pre.model, plan.repump, rng, pre.duration, ground, counters)) {
            out.survived = false;
            out.escape_time = ev.time();
            out.scatter_count = counters.scatter_count;
            out.d_visits = counters.d_visits;
            out.final_energy = pre.model->energy(ev.state(), ground);
            return out;
        }
        state = ev.state();
        if (pre.reset_level)
            state.level = plan.initial_level;
        state = transfer_state(state, *pre.model, model);
    } else {
        state = sample_thermal_state(model, plan.initial_level, plan.initial_temperature, rng);
    }

    const double step = resolve_step(plan.step, model);
    Evolution ev(model, rng, state, step, plan.ambient_heating);
    const bool kept = run_phase(ev, model, plan.repump, rng, plan.hold_duration, ground, counters);
    out.survived = kept;
    if (!kept)
        out.escape_time = ev.time();
    out.scatter_count = counters.scatter_count;
    out.d_visits = counters.d_visits;
    out.final_energy = model.energy(ev.state(), ground);
    return out;
}

TrialOutcome run_trial(const TrialPlan& plan, std::uint64_t seed)
{
    Rng rng(seed);
    return run_trial(plan, rng);
}

SurvivalCurve survival_scan(const std::vector<TrialPlan>& plans, const std::vector<double>& x, int n_trials,
                            std::uint64_t master_seed, unsigned threads)
{
    if (n_trials < 1)
        throw std::invalid_argument("n_trials must be >= 1");
    if (plans.size() != x.size())
        throw std::invalid_argument("one trial plan per scan point required");
    const std::size_t n_points = plans.size();
    const auto per_point = static_cast<std::size_t>(n_trials);
    std::vector<char> survived(n_points * per_point, 0);
    parallel_for(n_points * per_point, threads, [&](std::size_t k) {
        const std::size_t point = k / per_point;
        const std::size_t trial = k % per_point;
        Rng rng = make_substream(master_seed, point, trial);
        survived[k] = run_trial(plans[point], rng).survived ? 1 : 0;
    });

    SurvivalCurve curve;
    curve.durations = x;
    for (std::size_t p = 0; p < n_points; ++p) {
        int ok = 0;
        for (std::size_t t = 0; t < per_point; ++t)
            ok += survived[p * per_point + t];
        const auto [lo, hi] = wilson_interval(ok, n_trials);
        curve.successes.push_back(ok);
        curve.trials.push_back(n_trials);
        curve.interval_lo.push_back(lo);
        curve.interval_hi.push_back(hi);
    }
    return curve;
}

SurvivalCurve survival_curve(const TrialPlan& plan, const std::vector<double>& durations, int n_trials,
                             std::uint64_t master_seed, unsigned threads)
{
    std::vector<TrialPlan> plans;
    for (double d : durations) {
        TrialPlan p = plan;
        p.hold_duration = d;
        plans.push_back(std::move(p));
    }
    return survival_scan(plans, durations, n_trials, master_seed, threads);
}

HeatingMeasurement measure_heating(const TrialPlan& plan, int n_ions, std::uint64_t master_seed, unsigned threads)
{
    if (n_ions < 2)
        throw std::invalid_argument("heating measurement needs at least two ions");
    if (!(plan.hold_duration > 0.0))
        throw std::invalid_argument("heating measurement needs a positive hold duration");
    const auto& model = *plan.model;
    const auto n = static_cast<std::size_t>(n_ions);
    std::vector<double> gain(n, 0.0);
    std::vector<int> events(n, 0);
    std::vector<char> lost(n, 0);
    parallel_for(n, threads, [&](std::size_t k) {
        Rng rng = make_substream(master_seed, k);
        const IonState start = sample_thermal_state(model, plan.initial_level, plan.initial_temperature, rng);
        const double e0 = model.energy(start, plan.initial_level);
        const double step = resolve_step(plan.step, model);
        Evolution ev(model, rng, start, step, plan.ambient_heating);
        PhaseCounters counters;
        lost[k] = run_phase(ev, model, plan.repump, rng, plan.hold_duration, plan.initial_level, counters) ? 0 : 1;
        gain[k] = model.energy(ev.state(), plan.initial_level) - e0;
        events[k] = counters.scatter_count;
    });
    if (std::any_of(lost.begin(), lost.end(), [](char c) { return c != 0; }))
        throw std::runtime_error("ion lost during heating measurement; lower the hold time or heating");

    double mean = 0.0;
    long total_events = 0;
    for (std::size_t k = 0; k < n; ++k) {
        mean += gain[k];
        total_events += events[k];
    }
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double g : gain)
        var += (g - mean) * (g - mean);
    var /= static_cast<double>(n - 1);
    const double scale = 1.0 / (Const::boltzmann * plan.hold_duration);
    return {mean * scale, std::sqrt(var / static_cast<double>(n)) * scale, total_events};
}

} // namespace iontrap
