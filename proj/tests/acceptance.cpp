// Acceptance checks. Prints one PASS/FAIL line per criterion; exit status 1 if any fail.
// Usage: acceptance [criterion numbers...]   (default: all)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "iontrap/constants.hpp"
#include "iontrap/experiment_runner.hpp"

using namespace iontrap;

namespace
{

struct Outcome
{
    bool pass = false;
    std::string detail;
};

class Stopwatch
{
  public:
    [[nodiscard]] double seconds() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string format(const char* fmt, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, fmt, args...);
    return buf;
}

Protocol preset(const std::string& name)
{
    return builtin_presets().at(name);
}

double fitted_lifetime(const FitResult& fit)
{
    return fit.lower_bound ? *fit.lower_bound : fit.value;
}

std::string describe_fit(const FitResult& fit, double scale, const char* unit)
{
    if (fit.lower_bound)
        return format("> %.4g %s (no decay, 95%% bound)", *fit.lower_bound * scale, unit);
    return format("%.4g +- %.2g %s", fit.value * scale, fit.sigma * scale, unit);
}

// 1. Analytic lifetime of the VIS preset.
Outcome analytic_lifetime()
{
    const Stopwatch clock;
    const auto r = predict_rates(protocol_environment(preset("fig2_norepump")), "S1/2");
    const double t = clock.seconds();
    const bool ok = r.lifetime >= 16e-3 && r.lifetime <= 24e-3 && t < 1.0;
    return {ok, format("tau = %.2f ms (gamma_D = %.1f /s), want [16, 24] ms; %.3f s", r.lifetime * 1e3, r.gamma_d, t)};
}

// 2. Recoil heating with a closed cycle at 200 Hz scattering, 532 nm.
Outcome recoil_heating()
{
    const Stopwatch clock;
    auto env = protocol_environment(preset("fig2_norepump"));
    env.scheme = builtin_barium({1.0, 1.0, 0.0, 0.0});
    env.stray = StrayField();
    env.axial_frequency = kTwoPi * 100.0;
    // A 1 cm waist keeps the scattering rate uniform over the ion's excursion.
    const double waist = 1e-2;
    env.dipole_beams = {GaussianBeam(1.0, waist, 532e-9)};
    const double per_watt = scattering_rate(env, "S1/2", Vec3::Zero());
    const double target_rate = 200.0;
    env.dipole_beams = {GaussianBeam(target_rate / per_watt, waist, 532e-9)};

    TrialPlan plan;
    plan.model = std::make_shared<const TrapModel>(env);
    plan.initial_temperature = 0.0;
    plan.hold_duration = 30e-3;
    const int ions = 2000;
    const auto h = measure_heating(plan, ions, 20170202, 0);
    const double t = clock.seconds();

    const double e_rec = recoil_energy(532e-9, env.scheme.mass());
    const double expected = 2.0 * target_rate * e_rec / Const::boltzmann;
    const double rel = h.rate / expected - 1.0;
    const bool ok = std::abs(rel) <= 0.10 && h.scatter_events >= 10000 && t < 30.0;
    return {ok, format("MC %.2f +- %.2f uK/s vs 2 G E_rec/k_B = %.2f uK/s (%+.1f%%), %ld events; %.1f s",
                       h.rate * 1e6, h.rate_sigma * 1e6, expected * 1e6, rel * 100.0, h.scatter_events, t)};
}

// 3. VIS survival without repump, 500 trials x 8 durations.
Outcome vis_survival()
{
    const Stopwatch clock;
    auto p = preset("fig2_norepump");
    p.trials_per_point = 500;
    const auto rec = run_protocol(p, 0);
    const double t = clock.seconds();
    if (!rec.lifetime_fit)
        return {false, "no lifetime fit"};
    const auto& fit = *rec.lifetime_fit;
    const bool ok = fit.converged && fit.value >= 21e-3 * 0.6 && fit.value <= 21e-3 * 1.4 && t < 600.0;
    return {ok, format("tau_fit = %s, want 21 ms +- 40%%; %.0f s", describe_fit(fit, 1e3, "ms").c_str(), t)};
}

// 4. Repump gain under identical seeds.
Outcome repump_gain()
{
    const Stopwatch clock;
    const int trials = 100;
    auto off = preset("fig2_norepump");
    auto on = preset("fig2_repump");
    off.trials_per_point = trials;
    on.trials_per_point = trials;
    on.master_seed = off.master_seed;
    const auto rec_off = run_protocol(off, 0);
    const auto rec_on = run_protocol(on, 0);
    const double t = clock.seconds();
    if (!rec_off.lifetime_fit || !rec_on.lifetime_fit)
        return {false, "missing lifetime fit"};
    const double ratio = fitted_lifetime(*rec_on.lifetime_fit) / fitted_lifetime(*rec_off.lifetime_fit);
    const bool ok = rec_off.lifetime_fit->converged && ratio >= 5.0;
    return {ok, format("repump %s / no repump %s = %.1fx, want >= 5x (%d trials, seed %llu); %.0f s",
                       describe_fit(*rec_on.lifetime_fit, 1e3, "ms").c_str(),
                       describe_fit(*rec_off.lifetime_fit, 1e3, "ms").c_str(), ratio, trials,
                       static_cast<unsigned long long>(off.master_seed), t)};
}

// 5. NIR survival at 1 s.
Outcome nir_longevity()
{
    const Stopwatch clock;
    auto p = preset("fig3_nir");
    p.hold_durations = {1.0};
    p.trials_per_point = 300;
    const auto rec = run_protocol(p, 0);
    const double t = clock.seconds();
    const double prob = rec.curve.probability(0);
    return {prob >= 0.6, format("p(1 s) = %.3f (%d/%d) [%.3f, %.3f], want >= 0.6; %.0f s", prob,
                                rec.curve.successes[0], rec.curve.trials[0], rec.curve.interval_lo[0],
                                rec.curve.interval_hi[0], t)};
}

// 6. Secular frequencies and Hessian against the analytic Gaussian well.
Outcome secular_frequencies()
{
    bool ok = true;
    std::string detail;
    const std::pair<const char*, double> cases[] = {{"fig2_norepump", 80e3}, {"fig3_nir", 60e3}};
    for (const auto& [name, target] : cases) {
        const auto env = protocol_environment(preset(name));
        const auto rep = trap_report(env, "S1/2");
        const double analytic = analytic_radial_frequency(rep.optical_depth, env.scheme.mass(),
                                                          env.dipole_beams.front().waist());
        double worst_target = 0.0;
        double worst_analytic = 0.0;
        for (std::size_t i = 0; i < 2; ++i) {
            const double w = rep.radial_frequency(i);
            worst_target = std::max(worst_target, std::abs(w / kTwoPi / target - 1.0));
            worst_analytic = std::max(worst_analytic, std::abs(w / analytic - 1.0));
        }
        ok = ok && worst_target <= 0.15 && worst_analytic <= 0.02;
        detail += format("%s: U0 = %.2f mK, f_r = %.1f/%.1f kHz (target %.0f kHz, %.1f%%), vs analytic %.2f%%; ",
                         name, rep.optical_depth / Const::boltzmann * 1e3, rep.radial_frequency(0) / kTwoPi * 1e-3,
                         rep.radial_frequency(1) / kTwoPi * 1e-3, target * 1e-3, worst_target * 100.0,
                         worst_analytic * 100.0);
    }
    detail.resize(detail.size() - 2);
    return {ok, detail};
}

// 7. Radial-cutoff model against a sampled thermal ensemble.
Outcome radial_cutoff_oracle()
{
    const Stopwatch clock;
    const auto env = protocol_environment(preset("fig3_nir"));
    const auto rep = trap_report(env, "S1/2");
    const double m = env.scheme.mass();
    const double depth = rep.depth;
    const int samples = 100000;
    std::mt19937_64 rng(20170403);
    const CutoffModel chosen = preset("fig4_protocol1").cutoff_model;

    double worst_chosen = 0.0;
    double worst_other = 0.0;
    for (double eta : {0.5, 1.0, 1.5, 2.0, 3.0, 5.0, 8.0, 12.0, 20.0}) {
        const double t = depth / (Const::boltzmann * eta);
        const double kt = Const::boltzmann * t;
        // Phase-space Boltzmann sampling of the two radial modes; bound if the radial energy is below the barrier.
        std::normal_distribution<double> vel(0.0, std::sqrt(kt / m));
        std::normal_distribution<double> pos0(0.0, std::sqrt(kt / (m * rep.radial_omega_squared[0])));
        std::normal_distribution<double> pos1(0.0, std::sqrt(kt / (m * rep.radial_omega_squared[1])));
        int bound = 0;
        for (int i = 0; i < samples; ++i) {
            const double vx = vel(rng);
            const double vy = vel(rng);
            const double x = pos0(rng);
            const double y = pos1(rng);
            const double e = 0.5 * m * (vx * vx + vy * vy) +
                             0.5 * m * (rep.radial_omega_squared[0] * x * x + rep.radial_omega_squared[1] * y * y);
            bound += e < depth;
        }
        const double frac = static_cast<double>(bound) / samples;
        const auto other = chosen == CutoffModel::exp2d ? CutoffModel::exp1 : CutoffModel::exp2d;
        worst_chosen = std::max(worst_chosen, std::abs(frac - radial_cutoff_popt(depth, t, chosen)));
        worst_other = std::max(worst_other, std::abs(frac - radial_cutoff_popt(depth, t, other)));
    }
    const double t = clock.seconds();
    const bool ok = worst_chosen <= 0.02 && t < 60.0;
    return {ok, format("max |model - ensemble| = %.4f for %s (other form: %.3f), eta in [0.5, 20], 1e5 samples; "
                       "%.1f s",
                       worst_chosen, std::string(to_string(chosen)).c_str(), worst_other, t)};
}

// 8. Thermometry round trip and the protocol-2 heating check.
Outcome thermometry_round_trip()
{
    const Stopwatch clock;
    const auto p1 = preset("fig4_protocol1");
    const double t1 = 320e-6;
    const int synthetic_trials = 200;
    std::mt19937_64 rng(20170404);
    std::vector<BinomialPoint> pts;
    for (double d : p1.depths) {
        const double p = radial_cutoff_popt(d * Const::boltzmann, t1, p1.cutoff_model);
        pts.push_back({d * Const::boltzmann, std::binomial_distribution<int>(synthetic_trials, p)(rng),
                       synthetic_trials});
    }
    const auto synth = fit_temperature(pts, p1.cutoff_model);
    const bool synth_ok = synth.converged && std::abs(synth.value / t1 - 1.0) <= 0.10;

    auto p2 = preset("fig4_protocol2");
    p2.trials_per_point = 100;
    const auto rec2 = run_protocol(p2, 0);
    if (!rec2.temperature_fit)
        return {false, "protocol 2 produced no temperature fit"};
    const auto& fit2 = *rec2.temperature_fit;
    const double t2_expected = 500e-6;
    const bool run_ok = fit2.converged && std::abs(fit2.value - t2_expected) <= 2.0 * fit2.sigma;

    auto p1_run = p1;
    p1_run.trials_per_point = 100;
    const auto rec1 = run_protocol(p1_run, 0);
    std::string heating = "n/a";
    if (rec1.temperature_fit && rec1.temperature_fit->converged && fit2.converged) {
        const auto h = heating_rate(*rec1.temperature_fit, fit2, p2.pre_hold->duration);
        heating = format("%.0f +- %.0f uK/s", h.rate * 1e6, h.sigma * 1e6);
    }
    const double t = clock.seconds();
    return {synth_ok && run_ok,
            format("synthetic T = %s (want 320 uK +- 10%%); protocol 2 T2 = %s (want 500 uK within 2 sigma, "
                   "%d trials/point); protocol 1 run T1 = %s, heating %s; %.0f s",
                   describe_fit(synth, 1e6, "uK").c_str(), describe_fit(fit2, 1e6, "uK").c_str(),
                   p2.trials_per_point,
                   rec1.temperature_fit ? describe_fit(*rec1.temperature_fit, 1e6, "uK").c_str() : "n/a",
                   heating.c_str(), t)};
}

// 9. Coverage of the 3 sigma intervals over 100 synthetic replications.
Outcome statistical_coverage()
{
    const int reps = 100;
    const int trials = 50;
    const double tau = 21e-3;
    const double temp = 320e-6;
    const auto durations = preset("fig2_norepump").hold_durations;
    const auto p1 = preset("fig4_protocol1");
    int tau_hits = 0;
    int temp_hits = 0;
    for (int r = 0; r < reps; ++r) {
        Rng rng = make_substream(20170409, static_cast<std::uint64_t>(r));
        std::vector<BinomialPoint> a, b;
        for (double t : durations)
            a.push_back({t, std::binomial_distribution<int>(trials, std::exp(-t / tau))(rng), trials});
        for (double d : p1.depths) {
            const double p = radial_cutoff_popt(d * Const::boltzmann, temp, p1.cutoff_model);
            b.push_back({d * Const::boltzmann, std::binomial_distribution<int>(trials, p)(rng), trials});
        }
        const auto fa = fit_exponential(a);
        const auto fb = fit_temperature(b, p1.cutoff_model);
        tau_hits += fa.converged && std::abs(fa.value - tau) <= 3.0 * fa.sigma;
        temp_hits += fb.converged && std::abs(fb.value - temp) <= 3.0 * fb.sigma;
    }
    const bool ok = tau_hits >= 95 && temp_hits >= 95;
    return {ok, format("within 3 sigma: lifetime %d/100, temperature %d/100, want >= 95 each", tau_hits, temp_hits)};
}

// 10. Byte-identical CLI output across thread counts.
std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "iontrap-sim");
    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    return iontrap::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
}

Outcome determinism()
{
    const Stopwatch clock;
    const auto dir = std::filesystem::temp_directory_path() / "iontrap_acceptance";
    std::filesystem::create_directories(dir);

    auto vis = preset("fig2_norepump");
    vis.hold_durations = {1e-3, 5e-3, 20e-3};
    vis.trials_per_point = 24;
    auto scan = preset("fig4_protocol1");
    scan.depths = {0.5e-3, 1e-3, 2e-3};
    scan.trials_per_point = 24;
    const auto vis_cfg = dir / "vis.json";
    const auto scan_cfg = dir / "scan.json";
    std::ofstream(vis_cfg) << protocol_to_json(vis);
    std::ofstream(scan_cfg) << protocol_to_json(scan);

    struct Case
    {
        std::string name;
        std::vector<std::string> args;
    };
    const std::vector<Case> cases{
        {"lifetime", {"lifetime", "--config", vis_cfg.string(), "--seed", "77"}},
        {"thermometry", {"thermometry", "--config", scan_cfg.string(), "--seed", "78"}},
        {"rates", {"rates", "--config", vis_cfg.string(), "--samples", "500"}},
    };
    bool ok = true;
    std::string detail;
    for (const auto& c : cases) {
        std::vector<std::string> outputs;
        for (const char* threads : {"1", "2", "4"}) {
            const auto path = dir / (c.name + "_" + threads + ".csv");
            auto args = c.args;
            args.insert(args.end(), {"--threads", threads, "--out", path.string()});
            if (cli(args) != 0) {
                ok = false;
                detail += c.name + ": exit status nonzero; ";
            }
            outputs.push_back(slurp(path));
        }
        const bool same = !outputs[0].empty() && outputs[0] == outputs[1] && outputs[0] == outputs[2];
        ok = ok && same;
        detail += format("%s %s (%zu bytes); ", c.name.c_str(), same ? "identical" : "DIFFERENT", outputs[0].size());
    }
    std::filesystem::remove_all(dir);
    detail += format("threads 1/2/4; %.0f s", clock.seconds());
    return {ok, detail};
}

} // namespace

int main(int argc, char** argv)
{
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"analytic lifetime", analytic_lifetime},
        {"recoil heating identity", recoil_heating},
        {"VIS survival without repump", vis_survival},
        {"repump gain", repump_gain},
        {"NIR longevity", nir_longevity},
        {"secular frequencies", secular_frequencies},
        {"radial-cutoff oracle", radial_cutoff_oracle},
        {"thermometry round trip", thermometry_round_trip},
        {"statistical coverage", statistical_coverage},
        {"determinism", determinism},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i)
        selected.insert(std::stoi(argv[i]));

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!selected.empty() && !selected.count(id))
            continue;
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::printf("[%s] %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
