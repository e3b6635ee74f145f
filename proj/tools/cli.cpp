#include "cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "iontrap/constants.hpp"
#include "iontrap/experiment_runner.hpp"

namespace iontrap::cli
{

namespace
{

struct Common
{
    std::string config;
    std::string preset;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    unsigned threads = 0;
};

void add_common(CLI::App& app, Common& c, bool with_trials)
{
    app.add_option("--config", c.config, "protocol config (JSON)");
    app.add_option("--preset", c.preset, "built-in protocol name (see `presets`)");
    app.add_option("--out", c.out, "output file");
    app.add_option("--seed", c.seed, "override the master seed");
    app.add_option("--threads", c.threads, "worker threads, 0 = all cores");
    if (with_trials)
        app.add_option("--trials", c.trials, "override trials per scan point");
}

Protocol resolve_protocol(const Common& c)
{
    if (!c.config.empty() && !c.preset.empty())
        throw ConfigError("give either --config or --preset, not both");
    Protocol p;
    if (!c.config.empty()) {
        p = load_protocol_file(c.config);
    } else if (!c.preset.empty()) {
        const auto presets = builtin_presets();
        const auto it = presets.find(c.preset);
        if (it == presets.end())
            throw ConfigError("unknown preset '" + c.preset + "'");
        p = it->second;
    } else {
        throw ConfigError("a protocol is required: pass --config PATH or --preset NAME");
    }
    if (c.seed)
        p.master_seed = *c.seed;
    if (c.trials)
        p.trials_per_point = *c.trials;
    p.validate();
    return p;
}

std::ofstream open_output(const std::string& path)
{
    std::ofstream f(path);
    if (!f)
        throw std::runtime_error("cannot write '" + path + "'");
    f << std::setprecision(10);
    return f;
}

std::string fmt(double x, int precision = 4)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", precision, x);
    return buf;
}

double to_mk(double joule)
{
    return joule / Const::boltzmann * 1e3;
}

double to_khz(double omega)
{
    return omega / kTwoPi * 1e-3;
}

void cmd_potential(const Common& c, std::ostream& out)
{
    const Protocol p = resolve_protocol(c);
    const TrapEnvironment env = protocol_environment(p);
    out << std::left << std::setw(8) << "level" << std::setw(12) << "depth_mK" << std::setw(14) << "f_r1_kHz"
        << std::setw(14) << "f_r2_kHz" << std::setw(12) << "f_z_kHz" << "state\n";
    std::vector<PotentialReport> reports;
    for (const auto& lv : env.scheme.levels()) {
        const auto r = trap_report(env, lv.name);
        reports.push_back(r);
        std::string state = r.is_confining ? "confining" : (r.radial_omega_squared[1] < 0.0 ? "repulsive" : "open");
        out << std::left << std::setw(8) << lv.name << std::setw(12) << fmt(to_mk(r.depth)) << std::setw(14)
            << fmt(to_khz(r.radial_frequency(0))) << std::setw(14) << fmt(to_khz(r.radial_frequency(1)))
            << std::setw(12) << fmt(to_khz(r.axial_frequency())) << state << '\n';
    }
    if (c.out.empty())
        return;
    auto f = open_output(c.out);
    f << "axis,offset_m";
    for (const auto& lv : env.scheme.levels())
        f << ',' << lv.name << "_mk";
    f << '\n';
    const double w = p.dipole_beam.waist;
    const int n = 121;
    const std::array<std::pair<const char*, Vec3>, 2> axes{{{"x", Vec3::UnitX()}, {"z", Vec3::UnitZ()}}};
    for (const auto& [name, dir] : axes) {
        const double span = std::string(name) == "x" ? 3.0 * w : 3.0 * rayleigh_range(env.dipole_beams.front());
        for (int i = 0; i < n; ++i) {
            const double s = -span + 2.0 * span * i / (n - 1);
            f << name << ',' << s;
            for (const auto& lv : env.scheme.levels())
                f << ',' << to_mk(total_potential(env, lv.name, s * dir));
            f << '\n';
        }
    }
}

struct RatesArgs
{
    double power_unc = 0.13;
    double waist_unc = 0.08;
    int samples = 1000;
    std::optional<double> thermal;
    std::string level = "S1/2";
};

void cmd_rates(const Common& c, const RatesArgs& a, std::ostream& out)
{
    const Protocol p = resolve_protocol(c);
    const TrapEnvironment env = protocol_environment(p);
    RateOptions opts;
    opts.thermal_temperature = a.thermal;
    const auto r = predict_rates(env, a.level, opts);
    out << std::left << std::setw(16) << "level" << a.level << '\n'
        << std::setw(16) << "gamma_offr_hz" << fmt(r.gamma_offr, 6) << '\n'
        << std::setw(16) << "gamma_d_hz" << fmt(r.gamma_d, 6) << '\n'
        << std::setw(16) << "lifetime_ms" << (std::isfinite(r.lifetime) ? fmt(r.lifetime * 1e3, 6) : "inf") << '\n'
        << std::setw(16) << "recoil_uk_per_s" << fmt(r.recoil_rate * 1e6, 6) << '\n';
    if (c.out.empty())
        return;
    std::vector<double> times = p.hold_durations;
    const auto band = uncertainty_band(env, a.level, {{"power", a.power_unc}, {"waist", a.waist_unc}}, times,
                                       a.samples, p.master_seed, opts);
    auto f = open_output(c.out);
    f << "duration_s,p_point,p_lo,p_hi\n";
    for (std::size_t i = 0; i < times.size(); ++i)
        f << times[i] << ',' << survival_prediction(r, times[i]) << ',' << band.p_lo[i] << ',' << band.p_hi[i]
          << '\n';
}

void cmd_lifetime(const Common& c, std::ostream& out)
{
    const Protocol p = resolve_protocol(c);
    const RunRecord rec = run_protocol(p, c.threads);
    out << fit_summary(rec);
    if (!c.out.empty()) {
        auto f = open_output(c.out);
        write_survival_csv(f, rec);
    }
}

struct CsvData
{
    bool depth = false;
    std::vector<BinomialPoint> points;
};

CsvData read_counts(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open data file '" + path + "'");
    CsvData d;
    std::string line;
    if (!std::getline(in, line))
        throw ConfigError(path + ": empty file");
    const auto first = line.substr(0, line.find(','));
    if (first == "depth_k")
        d.depth = true;
    else if (first != "duration_s")
        throw ConfigError(path + ": first column must be duration_s or depth_k");
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty())
            continue;
        std::stringstream ss(line);
        std::string x, k, n;
        if (!std::getline(ss, x, ',') || !std::getline(ss, k, ',') || !std::getline(ss, n, ','))
            throw ConfigError(path + ": line " + std::to_string(row) + ": expected x,successes,trials");
        try {
            BinomialPoint pt{std::stod(x), std::stoi(k), std::stoi(n)};
            if (d.depth)
                pt.x *= Const::boltzmann;
            d.points.push_back(pt);
        } catch (const std::logic_error&) {
            throw ConfigError(path + ": line " + std::to_string(row) + ": not a number");
        }
    }
    return d;
}

void print_fit(std::ostream& out, const std::string& label, const FitResult& fit, double scale, const char* unit)
{
    out << std::left << std::setw(16) << label;
    if (fit.converged)
        out << fmt(fit.value * scale, 6) << " +- " << fmt(fit.sigma * scale, 3) << ' ' << unit << '\n';
    else if (fit.lower_bound)
        out << "> " << fmt(*fit.lower_bound * scale, 6) << ' ' << unit << " (not converged)\n";
    else if (fit.upper_bound)
        out << "< " << fmt(*fit.upper_bound * scale, 6) << ' ' << unit << " (not converged)\n";
    else
        out << "not converged\n";
}

struct ThermoArgs
{
    std::vector<std::string> data;
    double delay = 0.0;
    std::string model = "exp2d";
};

void cmd_thermometry(const Common& c, const ThermoArgs& a, std::ostream& out)
{
    const CutoffModel model = [&] {
        try {
            return parse_cutoff_model(a.model);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }();
    std::vector<FitResult> temps;
    if (a.data.empty()) {
        Protocol p = resolve_protocol(c);
        if (!p.is_depth_scan())
            throw ConfigError("thermometry needs a depth scan (depths_k) or --data");
        p.cutoff_model = model;
        const RunRecord rec = run_protocol(p, c.threads);
        out << fit_summary(rec);
        if (!c.out.empty()) {
            auto f = open_output(c.out);
            write_survival_csv(f, rec);
        }
        return;
    }
    for (const auto& path : a.data) {
        const auto d = read_counts(path);
        if (d.depth) {
            const auto fit = fit_temperature(d.points, model);
            print_fit(out, "temperature_uk", fit, 1e6, "uK");
            temps.push_back(fit);
        } else {
            print_fit(out, "lifetime_ms", fit_exponential(d.points), 1e3, "ms");
        }
    }
    if (temps.size() == 2) {
        if (!(a.delay > 0.0))
            throw ConfigError("--delay is required to turn two temperatures into a heating rate");
        const auto h = heating_rate(temps[0], temps[1], a.delay);
        out << std::left << std::setw(16) << "heating_uk_per_s" << fmt(h.rate * 1e6, 6) << " +- "
            << fmt(h.sigma * 1e6, 3) << '\n';
    }
}

void cmd_presets(const Common& c, const std::string& name, std::ostream& out)
{
    const auto presets = builtin_presets();
    if (name.empty()) {
        for (const auto& [key, p] : presets)
            out << key << '\n';
        return;
    }
    const auto it = presets.find(name);
    if (it == presets.end())
        throw ConfigError("unknown preset '" + name + "'");
    const auto text = protocol_to_json(it->second);
    if (c.out.empty()) {
        out << text << '\n';
    } else {
        auto f = open_output(c.out);
        f << text << '\n';
    }
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Optical dipole trap simulator for single ions"};
    app.require_subcommand(1);

    Common common;
    auto* potential = app.add_subcommand("potential", "trap report per level and potential slices");
    add_common(*potential, common, false);

    RatesArgs rates_args;
    auto* rates = app.add_subcommand("rates", "analytic scattering, loss and recoil-heating rates");
    add_common(*rates, common, false);
    rates->add_option("--level", rates_args.level, "electronic level");
    rates->add_option("--power-uncertainty", rates_args.power_unc, "relative 1 sigma power error for the band");
    rates->add_option("--waist-uncertainty", rates_args.waist_unc, "relative 1 sigma waist error for the band");
    rates->add_option("--samples", rates_args.samples, "parameter samples for the band");
    rates->add_option("--thermal", rates_args.thermal, "average rates over a thermal cloud at this temperature (K)");

    auto* lifetime = app.add_subcommand("lifetime", "Monte Carlo survival scan with fit");
    add_common(*lifetime, common, true);

    ThermoArgs thermo_args;
    auto* thermometry = app.add_subcommand("thermometry", "temperature from survival versus trap depth");
    add_common(*thermometry, common, true);
    thermometry->add_option("--data", thermo_args.data, "CSV of counts (depth_k or duration_s first)")
        ->check(CLI::ExistingFile);
    thermometry->add_option("--delay", thermo_args.delay, "time between two datasets for a heating rate (s)");
    thermometry->add_option("--model", thermo_args.model, "radial cutoff model: exp2d or exp1");

    std::string preset_name;
    auto* presets = app.add_subcommand("presets", "list built-in protocols or dump one as JSON");
    presets->add_option("--name", preset_name, "preset to print");
    presets->add_option("--out", common.out, "write the JSON here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? 0 : 2;
    }

    try {
        if (potential->parsed())
            cmd_potential(common, out);
        else if (rates->parsed())
            cmd_rates(common, rates_args, out);
        else if (lifetime->parsed())
            cmd_lifetime(common, out);
        else if (thermometry->parsed())
            cmd_thermometry(common, thermo_args, out);
        else if (presets->parsed())
            cmd_presets(common, preset_name, out);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

} // namespace iontrap::cli
