#include "iontrap/experiment_runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "iontrap/constants.hpp"

namespace iontrap
{

using nlohmann::json;

namespace
{

constexpr double kWattPerCm2 = 1e4; // W/m^2

[[noreturn]] void fail(const std::string& field, const std::string& what)
{
    throw ConfigError("config field '" + field + "': " + what);
}

void reject_unknown(const json& j, const std::string& where, std::initializer_list<const char*> known)
{
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* k : known)
            ok = ok || key == k;
        if (!ok)
            fail(where.empty() ? key : where + "." + key, "unknown field");
    }
}

double number(const json& j, const std::string& key, const std::string& path)
{
    const auto it = j.find(key);
    if (it == j.end())
        fail(path, "missing");
    if (!it->is_number())
        fail(path, "expected a number");
    return it->get<double>();
}

double number_or(const json& j, const std::string& key, const std::string& path, double fallback)
{
    return j.contains(key) ? number(j, key, path) : fallback;
}

std::string text(const json& j, const std::string& key, const std::string& path)
{
    const auto it = j.find(key);
    if (it == j.end())
        fail(path, "missing");
    if (!it->is_string())
        fail(path, "expected a string");
    return it->get<std::string>();
}

Vec3 vector3(const json& j, const std::string& path)
{
    if (!j.is_array() || j.size() != 3)
        fail(path, "expected an array of three numbers");
    Vec3 v;
    for (int k = 0; k < 3; ++k) {
        if (!j[k].is_number())
            fail(path, "expected an array of three numbers");
        v[k] = j[k].get<double>();
    }
    return v;
}

std::vector<double> number_list(const json& j, const std::string& path)
{
    if (!j.is_array())
        fail(path, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& x : j) {
        if (!x.is_number())
            fail(path, "expected an array of numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

BeamSpec parse_beam(const json& j, const std::string& path, bool wavelength_optional)
{
    if (!j.is_object())
        fail(path, "expected an object");
    reject_unknown(j, path, {"wavelength_m", "waist_m", "power_w", "peak_intensity_w_per_cm2", "axis"});
    BeamSpec b;
    b.wavelength = wavelength_optional ? number_or(j, "wavelength_m", path + ".wavelength_m", 0.0)
                                       : number(j, "wavelength_m", path + ".wavelength_m");
    b.waist = number(j, "waist_m", path + ".waist_m");
    if (!(b.waist > 0.0))
        fail(path + ".waist_m", "must be > 0");
    const bool has_power = j.contains("power_w");
    const bool has_intensity = j.contains("peak_intensity_w_per_cm2");
    if (has_power == has_intensity)
        fail(path, "give exactly one of power_w or peak_intensity_w_per_cm2");
    if (has_power) {
        b.power = number(j, "power_w", path + ".power_w");
    } else {
        const double i0 = number(j, "peak_intensity_w_per_cm2", path + ".peak_intensity_w_per_cm2") * kWattPerCm2;
        b.power = i0 * std::numbers::pi * b.waist * b.waist / 2.0;
    }
    if (j.contains("axis"))
        b.axis = vector3(j.at("axis"), path + ".axis");
    return b;
}

json beam_json(const BeamSpec& b, bool include_wavelength = true)
{
    json j;
    if (include_wavelength)
        j["wavelength_m"] = b.wavelength;
    j["waist_m"] = b.waist;
    j["power_w"] = b.power;
    j["axis"] = {b.axis.x(), b.axis.y(), b.axis.z()};
    return j;
}

void validate_beam(const BeamSpec& b, const std::string& path, bool wavelength_optional)
{
    if (!(b.waist > 0.0))
        fail(path + ".waist_m", "must be > 0");
    if (!(b.power >= 0.0))
        fail(path + ".power_w", "must be >= 0");
    if (wavelength_optional ? b.wavelength < 0.0 : !(b.wavelength > 0.0))
        fail(path + ".wavelength_m", "must be > 0");
    if (std::abs(b.axis.norm() - 1.0) > 1e-9)
        fail(path + ".axis", "must be a unit vector");
}

void check_increasing(const std::vector<double>& xs, const std::string& path)
{
    for (std::size_t i = 1; i < xs.size(); ++i)
        if (!(xs[i] > xs[i - 1]))
            fail(path, "values must be strictly increasing");
}

std::vector<double> log_spaced(double lo, double hi, int n)
{
    std::vector<double> out;
    for (int i = 0; i < n; ++i)
        out.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
    return out;
}

double power_for_intensity(double intensity_w_cm2, double waist)
{
    return intensity_w_cm2 * kWattPerCm2 * std::numbers::pi * waist * waist / 2.0;
}

std::string format_number(double x)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

} // namespace

double BeamSpec::peak_intensity() const
{
    return 2.0 * power / (std::numbers::pi * waist * waist);
}

void Protocol::validate() const
{
    if (initial_level.empty())
        fail("initial_level", "must not be empty");
    if (!(initial_temperature >= 0.0))
        fail("initial_temperature_k", "must be >= 0");
    validate_beam(dipole_beam, "dipole_beam", false);
    if (!(axial_frequency_hz >= 0.0))
        fail("axial_frequency_hz", "must be >= 0");
    if (!(stray_field.norm() < 10.0))
        fail("stray_field_v_per_m", "magnitude must be below 10 V/m");
    if (!(calibration_factor > 0.5 && calibration_factor < 2.0))
        fail("calibration_factor", "must lie in (0.5, 2)");
    for (std::size_t i = 0; i < repump_beams.size(); ++i) {
        const auto path = "repump.beams[" + std::to_string(i) + "]";
        const auto& rb = repump_beams[i];
        if (rb.lower.empty() || rb.upper.empty())
            fail(path, "lower and upper levels are required");
        validate_beam(rb.beam, path, true);
        if (!(rb.saturation_parameter >= 0.0))
            fail(path + ".saturation_parameter", "must be >= 0");
    }
    if (pre_hold) {
        if (!(pre_hold->duration >= 0.0))
            fail("pre_hold.duration_s", "must be >= 0");
        if (pre_hold->power && !(*pre_hold->power >= 0.0))
            fail("pre_hold.power_w", "must be >= 0");
        if (!(pre_hold->ambient_heating >= 0.0))
            fail("pre_hold.ambient_heating_k_per_s", "must be >= 0");
    }
    if (hold_durations.empty())
        fail("hold_durations_s", "at least one duration is required");
    for (double t : hold_durations)
        if (!(t >= 0.0))
            fail("hold_durations_s", "durations must be >= 0");
    check_increasing(hold_durations, "hold_durations_s");
    if (!depths.empty()) {
        for (double d : depths)
            if (!(d > 0.0))
                fail("depths_k", "depths must be > 0");
        check_increasing(depths, "depths_k");
        if (hold_durations.size() != 1)
            fail("hold_durations_s", "a depth scan takes exactly one hold duration");
    }
    if (trials_per_point < 1)
        fail("trials_per_point", "must be >= 1");
    if (!(ambient_heating >= 0.0))
        fail("ambient_heating_k_per_s", "must be >= 0");
    if (!(integration_step >= 0.0))
        fail("integration_step_s", "must be >= 0");
}

Protocol protocol_from_json(const std::string& json_text)
{
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object())
        throw ConfigError("config must be a JSON object");
    reject_unknown(j, "",
                   {"name", "species_file", "initial_level", "initial_temperature_k", "dipole_beam",
                    "axial_frequency_hz", "stray_field_v_per_m", "calibration_factor", "repump", "pre_hold",
                    "hold_durations_s", "depths_k", "trials_per_point", "ambient_heating_k_per_s",
                    "integration_step_s", "master_seed", "cutoff_model"});
    Protocol p;
    if (j.contains("name"))
        p.name = text(j, "name", "name");
    if (j.contains("species_file"))
        p.species_file = text(j, "species_file", "species_file");
    if (j.contains("initial_level"))
        p.initial_level = text(j, "initial_level", "initial_level");
    p.initial_temperature = number_or(j, "initial_temperature_k", "initial_temperature_k", p.initial_temperature);
    if (!j.contains("dipole_beam"))
        fail("dipole_beam", "missing");
    p.dipole_beam = parse_beam(j.at("dipole_beam"), "dipole_beam", false);
    p.axial_frequency_hz = number_or(j, "axial_frequency_hz", "axial_frequency_hz", 0.0);
    if (j.contains("stray_field_v_per_m"))
        p.stray_field = vector3(j.at("stray_field_v_per_m"), "stray_field_v_per_m");
    p.calibration_factor = number_or(j, "calibration_factor", "calibration_factor", 1.0);

    if (j.contains("repump")) {
        const auto& r = j.at("repump");
        if (!r.is_object())
            fail("repump", "expected an object");
        reject_unknown(r, "repump", {"enabled", "beams"});
        if (r.contains("enabled")) {
            if (!r.at("enabled").is_boolean())
                fail("repump.enabled", "expected true or false");
            p.repump_enabled = r.at("enabled").get<bool>();
        }
        if (r.contains("beams")) {
            if (!r.at("beams").is_array())
                fail("repump.beams", "expected an array");
            for (std::size_t i = 0; i < r.at("beams").size(); ++i) {
                const auto& b = r.at("beams")[i];
                const auto path = "repump.beams[" + std::to_string(i) + "]";
                if (!b.is_object())
                    fail(path, "expected an object");
                reject_unknown(b, path,
                               {"lower", "upper", "wavelength_m", "waist_m", "power_w", "peak_intensity_w_per_cm2",
                                "axis", "saturation_parameter", "bare_detuning_hz"});
                RepumpBeamSpec rb;
                rb.lower = text(b, "lower", path + ".lower");
                rb.upper = text(b, "upper", path + ".upper");
                json geometry = json::object();
                for (const char* k : {"wavelength_m", "waist_m", "power_w", "peak_intensity_w_per_cm2", "axis"})
                    if (b.contains(k))
                        geometry[k] = b.at(k);
                rb.beam = parse_beam(geometry, path, true);
                rb.saturation_parameter = number(b, "saturation_parameter", path + ".saturation_parameter");
                rb.bare_detuning_hz = number_or(b, "bare_detuning_hz", path + ".bare_detuning_hz", 0.0);
                p.repump_beams.push_back(rb);
            }
        }
    }

    if (j.contains("pre_hold") && !j.at("pre_hold").is_null()) {
        const auto& h = j.at("pre_hold");
        if (!h.is_object())
            fail("pre_hold", "expected an object");
        reject_unknown(h, "pre_hold", {"duration_s", "power_w", "peak_intensity_w_per_cm2", "ambient_heating_k_per_s"});
        PreHold ph;
        ph.duration = number(h, "duration_s", "pre_hold.duration_s");
        if (h.contains("power_w") && h.contains("peak_intensity_w_per_cm2"))
            fail("pre_hold", "give at most one of power_w or peak_intensity_w_per_cm2");
        if (h.contains("power_w"))
            ph.power = number(h, "power_w", "pre_hold.power_w");
        if (h.contains("peak_intensity_w_per_cm2"))
            ph.power = power_for_intensity(
                number(h, "peak_intensity_w_per_cm2", "pre_hold.peak_intensity_w_per_cm2"), p.dipole_beam.waist);
        ph.ambient_heating = number_or(h, "ambient_heating_k_per_s", "pre_hold.ambient_heating_k_per_s", 0.0);
        p.pre_hold = ph;
    }

    if (!j.contains("hold_durations_s"))
        fail("hold_durations_s", "missing");
    p.hold_durations = number_list(j.at("hold_durations_s"), "hold_durations_s");
    if (j.contains("depths_k"))
        p.depths = number_list(j.at("depths_k"), "depths_k");
    if (j.contains("trials_per_point")) {
        if (!j.at("trials_per_point").is_number_integer())
            fail("trials_per_point", "expected an integer");
        p.trials_per_point = j.at("trials_per_point").get<int>();
    }
    p.ambient_heating = number_or(j, "ambient_heating_k_per_s", "ambient_heating_k_per_s", 0.0);
    p.integration_step = number_or(j, "integration_step_s", "integration_step_s", 0.0);
    if (j.contains("master_seed")) {
        if (!j.at("master_seed").is_number_unsigned())
            fail("master_seed", "expected a non-negative integer");
        p.master_seed = j.at("master_seed").get<std::uint64_t>();
    }
    if (j.contains("cutoff_model")) {
        try {
            p.cutoff_model = parse_cutoff_model(text(j, "cutoff_model", "cutoff_model"));
        } catch (const ConfigError&) {
            throw;
        } catch (const std::invalid_argument& e) {
            fail("cutoff_model", e.what());
        }
    }
    p.validate();
    return p;
}

Protocol load_protocol_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return protocol_from_json(ss.str());
}

std::string protocol_to_json(const Protocol& p)
{
    json j;
    j["name"] = p.name;
    if (p.species_file)
        j["species_file"] = *p.species_file;
    j["initial_level"] = p.initial_level;
    j["initial_temperature_k"] = p.initial_temperature;
    j["dipole_beam"] = beam_json(p.dipole_beam);
    j["axial_frequency_hz"] = p.axial_frequency_hz;
    j["stray_field_v_per_m"] = {p.stray_field.x(), p.stray_field.y(), p.stray_field.z()};
    j["calibration_factor"] = p.calibration_factor;
    json beams = json::array();
    for (const auto& rb : p.repump_beams) {
        json b = beam_json(rb.beam, rb.beam.wavelength > 0.0);
        b["lower"] = rb.lower;
        b["upper"] = rb.upper;
        b["saturation_parameter"] = rb.saturation_parameter;
        b["bare_detuning_hz"] = rb.bare_detuning_hz;
        beams.push_back(b);
    }
    j["repump"] = {{"enabled", p.repump_enabled}, {"beams", beams}};
    if (p.pre_hold) {
        json h;
        h["duration_s"] = p.pre_hold->duration;
        if (p.pre_hold->power)
            h["power_w"] = *p.pre_hold->power;
        h["ambient_heating_k_per_s"] = p.pre_hold->ambient_heating;
        j["pre_hold"] = h;
    }
    j["hold_durations_s"] = p.hold_durations;
    if (!p.depths.empty())
        j["depths_k"] = p.depths;
    j["trials_per_point"] = p.trials_per_point;
    j["ambient_heating_k_per_s"] = p.ambient_heating;
    j["integration_step_s"] = p.integration_step;
    j["master_seed"] = p.master_seed;
    j["cutoff_model"] = std::string(to_string(p.cutoff_model));
    return j.dump(2);
}

LevelScheme protocol_scheme(const Protocol& protocol)
{
    if (!protocol.species_file)
        return builtin_barium();
    try {
        return load_species_file(*protocol.species_file);
    } catch (const std::exception& e) {
        throw ConfigError("species_file '" + *protocol.species_file + "': " + e.what());
    }
}

TrapEnvironment protocol_environment(const Protocol& protocol, std::optional<double> power)
{
    BeamSpec beam = protocol.dipole_beam;
    if (power)
        beam.power = *power;
    TrapEnvironment env{protocol_scheme(protocol), {beam.beam()}, kTwoPi * protocol.axial_frequency_hz,
                        StrayField(protocol.stray_field), protocol.calibration_factor, {}};
    try {
        env.validate();
        if (!env.scheme.find_level(protocol.initial_level))
            throw ConfigError("initial_level '" + protocol.initial_level + "' is not a level of " +
                              env.scheme.species());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return env;
}

RepumpConfig protocol_repump(const Protocol& protocol, const LevelScheme& scheme)
{
    RepumpConfig cfg;
    cfg.enabled = protocol.repump_enabled;
    for (const auto& rb : protocol.repump_beams) {
        const TransitionLine* line = scheme.find_line(rb.lower, rb.upper);
        if (!line)
            throw ConfigError("repump beam " + rb.lower + " -> " + rb.upper + ": no such line in the level scheme");
        BeamSpec spec = rb.beam;
        if (spec.wavelength == 0.0)
            spec.wavelength = line->wavelength;
        cfg.beams.push_back({spec.beam(), rb.lower, rb.upper, rb.saturation_parameter, kTwoPi * rb.bare_detuning_hz});
    }
    return cfg;
}

double power_for_depth(const TrapEnvironment& env, const std::string& level, double depth)
{
    if (!(depth > 0.0))
        throw std::invalid_argument("target depth must be > 0");
    const double target = depth * Const::boltzmann;
    const GaussianBeam& ref = env.dipole_beams.front();
    auto depth_at = [&](double power) {
        TrapEnvironment e = env;
        e.dipole_beams.front() = ref.with_power(power);
        return trap_report(e, level).depth;
    };
    double lo = ref.power() > 0.0 ? ref.power() : 1.0;
    double hi = lo;
    for (int i = 0; depth_at(hi) < target; ++i) {
        hi *= 2.0;
        if (i > 60)
            throw std::runtime_error("no dipole power reaches the requested depth for " + level);
    }
    for (int i = 0; depth_at(lo) >= target; ++i) {
        lo *= 0.5;
        if (i > 60)
            throw std::runtime_error("cannot bracket the requested depth for " + level);
    }
    while (hi / lo - 1.0 > 1e-7) {
        const double mid = std::sqrt(lo * hi);
        (depth_at(mid) < target ? lo : hi) = mid;
    }
    return std::sqrt(lo * hi);
}

RunRecord run_protocol(const Protocol& protocol, unsigned threads)
{
    protocol.validate();
    const auto start = std::chrono::steady_clock::now();

    const TrapEnvironment env = protocol_environment(protocol);
    const auto& scheme = env.scheme;
    const std::size_t level = scheme.level_index(protocol.initial_level);

    TrialPlan base;
    base.model = std::make_shared<const TrapModel>(env);
    base.initial_level = level;
    base.initial_temperature = protocol.initial_temperature;
    base.hold_duration = protocol.hold_durations.front();
    base.ambient_heating = protocol.ambient_heating;
    base.repump = protocol_repump(protocol, scheme);
    base.step = protocol.integration_step;
    if (protocol.pre_hold) {
        const auto& ph = *protocol.pre_hold;
        base.pre_hold = PreHoldPlan{std::make_shared<const TrapModel>(protocol_environment(protocol, ph.power)),
                                    ph.duration, ph.ambient_heating, true};
    }

    RunRecord rec;
    rec.protocol = protocol;
    rec.seed = protocol.master_seed;

    if (protocol.is_depth_scan()) {
        std::vector<TrialPlan> plans;
        for (double d : protocol.depths) {
            const double power = power_for_depth(env, protocol.initial_level, d);
            rec.powers.push_back(power);
            TrialPlan plan = base;
            plan.model = std::make_shared<const TrapModel>(protocol_environment(protocol, power));
            plans.push_back(std::move(plan));
        }
        rec.curve = survival_scan(plans, protocol.depths, protocol.trials_per_point, protocol.master_seed, threads);
        if (protocol.depths.size() >= 3) {
            std::vector<BinomialPoint> pts;
            for (std::size_t i = 0; i < protocol.depths.size(); ++i)
                pts.push_back({protocol.depths[i] * Const::boltzmann, rec.curve.successes[i], rec.curve.trials[i]});
            rec.temperature_fit = fit_temperature(pts, protocol.cutoff_model);
        }
    } else {
        rec.powers.assign(protocol.hold_durations.size(), protocol.dipole_beam.power);
        rec.curve =
            survival_curve(base, protocol.hold_durations, protocol.trials_per_point, protocol.master_seed, threads);
        std::set<double> positive;
        for (double t : protocol.hold_durations)
            if (t > 0.0)
                positive.insert(t);
        if (positive.size() >= 3) {
            std::vector<BinomialPoint> pts;
            for (std::size_t i = 0; i < protocol.hold_durations.size(); ++i)
                pts.push_back({protocol.hold_durations[i], rec.curve.successes[i], rec.curve.trials[i]});
            rec.lifetime_fit = fit_exponential(pts);
        }
    }

    if (base.model->is_confining(level))
        rec.rates = predict_rates(env, protocol.initial_level);

    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

std::map<std::string, Protocol> builtin_presets()
{
    constexpr double vis_wavelength = 532e-9;
    constexpr double nir_wavelength = 1064e-9;
    constexpr double vis_waist = 2.6e-6;
    constexpr double nir_waist = 5.2e-6;
    constexpr double vis_intensity = 6.1e6;     // W/cm^2
    constexpr double nir_intensity = 4.7e7;     // W/cm^2
    constexpr double nir_max_intensity = 5e7;   // W/cm^2
    constexpr double ambient = 350e-6;          // K/s
    constexpr double axial_hz = 12e3;
    const Vec3 stray(1e-2, 0.0, 0.0);

    // Repump lasers cross the trap axis at the line wavelength; s = I/I_sat at their centre.
    constexpr double repump_saturation = 1e4;
    constexpr double repump_waist = 25e-6;
    constexpr double saturation_intensity = 10e-3; // W/cm^2
    auto repump_beam = [&](const char* lower, const char* upper) {
        RepumpBeamSpec rb;
        rb.lower = lower;
        rb.upper = upper;
        rb.beam = {0.0, repump_waist,
                   power_for_intensity(repump_saturation * saturation_intensity, repump_waist), Vec3::UnitX()};
        rb.saturation_parameter = repump_saturation;
        return rb;
    };

    Protocol fig2;
    fig2.initial_level = "S1/2";
    fig2.initial_temperature = 300e-6;
    fig2.dipole_beam = {vis_wavelength, vis_waist, power_for_intensity(vis_intensity, vis_waist), Vec3::UnitZ()};
    fig2.axial_frequency_hz = axial_hz;
    fig2.stray_field = stray;
    fig2.hold_durations = log_spaced(3e-3, 300e-3, 8);
    fig2.trials_per_point = 50;
    fig2.ambient_heating = ambient;
    fig2.master_seed = 20170201;

    std::map<std::string, Protocol> presets;

    Protocol no_rp = fig2;
    no_rp.name = "fig2_norepump";
    presets[no_rp.name] = no_rp;

    Protocol rp = fig2;
    rp.name = "fig2_repump";
    rp.repump_enabled = true;
    rp.repump_beams = {repump_beam("D3/2", "P1/2"), repump_beam("D5/2", "P3/2")};
    presets[rp.name] = rp;

    Protocol nir;
    nir.name = "fig3_nir";
    nir.initial_temperature = 300e-6;
    nir.dipole_beam = {nir_wavelength, nir_waist, power_for_intensity(nir_intensity, nir_waist), Vec3::UnitZ()};
    nir.axial_frequency_hz = axial_hz;
    nir.stray_field = stray;
    nir.hold_durations = log_spaced(0.1, 6.0, 8);
    nir.trials_per_point = 50;
    nir.ambient_heating = ambient;
    nir.master_seed = 20170301;
    presets[nir.name] = nir;

    Protocol p1 = nir;
    p1.name = "fig4_protocol1";
    p1.initial_temperature = 320e-6;
    p1.hold_durations = {10e-3};
    p1.depths = log_spaced(0.5e-3, 14e-3, 8);
    p1.master_seed = 20170401;
    presets[p1.name] = p1;

    Protocol p2 = p1;
    p2.name = "fig4_protocol2";
    p2.pre_hold = PreHold{0.5, power_for_intensity(nir_max_intensity, nir_waist), ambient};
    presets[p2.name] = p2;

    return presets;
}

void write_survival_csv(std::ostream& out, const RunRecord& record)
{
    out << (record.protocol.is_depth_scan() ? "depth_k" : "duration_s") << ",successes,trials,p,lo_1sigma,hi_1sigma\n";
    const auto& c = record.curve;
    for (std::size_t i = 0; i < c.durations.size(); ++i) {
        out << format_number(c.durations[i]) << ',' << c.successes[i] << ',' << c.trials[i] << ','
            << format_number(c.probability(i)) << ',' << format_number(c.interval_lo[i]) << ','
            << format_number(c.interval_hi[i]) << '\n';
    }
}

std::string fit_summary(const RunRecord& record)
{
    std::ostringstream out;
    out << "protocol        " << (record.protocol.name.empty() ? "(unnamed)" : record.protocol.name) << '\n';
    out << "seed            " << record.seed << '\n';
    out << "trials/point    " << record.protocol.trials_per_point << '\n';
    auto describe = [&](const char* label, const FitResult& fit, double scale, const char* unit) {
        out << label;
        if (fit.converged) {
            out << format_number(fit.value * scale) << " +- " << format_number(fit.sigma * scale) << ' ' << unit
                << '\n';
        } else if (fit.lower_bound) {
            out << "> " << format_number(*fit.lower_bound * scale) << ' ' << unit << " (95% bound, not converged)\n";
        } else if (fit.upper_bound) {
            out << "< " << format_number(*fit.upper_bound * scale) << ' ' << unit << " (95% bound, not converged)\n";
        } else {
            out << "not converged\n";
        }
    };
    if (record.lifetime_fit)
        describe("lifetime        ", *record.lifetime_fit, 1e3, "ms");
    if (record.temperature_fit)
        describe("temperature     ", *record.temperature_fit, 1e6, "uK");
    if (record.rates) {
        const auto& r = *record.rates;
        out << "gamma_offr      " << format_number(r.gamma_offr) << " Hz\n";
        out << "gamma_d         " << format_number(r.gamma_d) << " Hz\n";
        out << "predicted tau   "
            << (std::isfinite(r.lifetime) ? format_number(r.lifetime * 1e3) + " ms" : std::string("inf")) << '\n';
        out << "recoil heating  " << format_number(r.recoil_rate * 1e6) << " uK/s\n";
    }
    out << "wall time       " << format_number(record.wall_seconds) << " s\n";
    return out.str();
}

} // namespace iontrap
