#include "iontrap/atomic_data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "iontrap/constants.hpp"

namespace iontrap
{

LevelScheme::LevelScheme(std::string species, double mass, std::vector<Level> levels,
                         std::vector<TransitionLine> lines)
    : species_(std::move(species))
    , mass_(mass)
    , levels_(std::move(levels))
    , lines_(std::move(lines))
{
    validate();
}

std::optional<std::size_t> LevelScheme::find_level(std::string_view name) const
{
    for (std::size_t i = 0; i < levels_.size(); ++i)
        if (levels_[i].name == name)
            return i;
    return std::nullopt;
}

std::size_t LevelScheme::level_index(std::string_view name) const
{
    if (auto idx = find_level(name))
        return *idx;
    throw std::invalid_argument("unknown level '" + std::string(name) + "' in scheme " + species_);
}

const TransitionLine* LevelScheme::find_line(std::string_view a, std::string_view b) const
{
    for (const auto& l : lines_)
        if ((l.upper == a && l.lower == b) || (l.upper == b && l.lower == a))
            return &l;
    return nullptr;
}

const TransitionLine& LevelScheme::line(std::string_view a, std::string_view b) const
{
    if (const auto* l = find_line(a, b))
        return *l;
    throw std::invalid_argument("no transition line between '" + std::string(a) + "' and '" +
                                std::string(b) + "'");
}

double LevelScheme::transition_frequency(const TransitionLine& line) const
{
    const double de = level(line.upper).energy - level(line.lower).energy;
    return de / Const::planck_reduced;
}

void LevelScheme::validate() const
{
    if (!(mass_ > 0.0))
        throw std::invalid_argument("species mass must be positive");
    if (levels_.empty())
        throw std::invalid_argument("level scheme has no levels");

    for (std::size_t i = 0; i < levels_.size(); ++i) {
        for (std::size_t k = i + 1; k < levels_.size(); ++k)
            if (levels_[i].name == levels_[k].name)
                throw std::invalid_argument("duplicate level '" + levels_[i].name + "'");
        if (!(levels_[i].lifetime > 0.0))
            throw std::invalid_argument("level '" + levels_[i].name + "' needs a positive lifetime");
        if (levels_[i].j < 0.5 || std::fmod(2.0 * levels_[i].j, 1.0) != 0.0)
            throw std::invalid_argument("level '" + levels_[i].name + "' has invalid J");
    }
    const auto lowest = std::min_element(levels_.begin(), levels_.end(),
                                         [](const Level& a, const Level& b) { return a.energy < b.energy; });
    if (lowest->energy != 0.0)
        throw std::invalid_argument("ground level must have energy exactly 0");

    std::map<std::string, double> branching_sum;
    for (const auto& l : lines_) {
        const auto up = find_level(l.upper);
        const auto lo = find_level(l.lower);
        if (!up || !lo)
            throw std::invalid_argument("line " + l.upper + " -> " + l.lower + " references an unknown level");
        if (levels_[*up].energy <= levels_[*lo].energy)
            throw std::invalid_argument("line " + l.upper + " -> " + l.lower + ": upper level is not above lower");
        if (l.branching_fraction < 0.0 || l.branching_fraction > 1.0)
            throw std::invalid_argument("line " + l.upper + " -> " + l.lower + ": branching outside [0,1]");
        if (!(l.wavelength > 0.0))
            throw std::invalid_argument("line " + l.upper + " -> " + l.lower + ": wavelength must be positive");
        const double from_energy = kTwoPi * Const::speed_of_light * Const::planck_reduced /
                                   (levels_[*up].energy - levels_[*lo].energy);
        if (std::abs(from_energy / l.wavelength - 1.0) > 5e-3)
            throw std::invalid_argument("line " + l.upper + " -> " + l.lower +
                                        ": wavelength inconsistent with level energies");
        branching_sum[l.upper] += l.branching_fraction;
    }
    for (const auto& [name, sum] : branching_sum) {
        if (level(name).is_long_lived())
            throw std::invalid_argument("level '" + name + "' decays but has no finite lifetime");
        if (std::abs(sum - 1.0) > 1e-9)
            throw std::invalid_argument("branching fractions out of '" + name + "' do not sum to 1");
    }

    // Connectivity of the line graph.
    if (levels_.size() > 1) {
        std::vector<bool> seen(levels_.size(), false);
        std::vector<std::size_t> stack{0};
        seen[0] = true;
        while (!stack.empty()) {
            const auto cur = stack.back();
            stack.pop_back();
            for (const auto& l : lines_) {
                const auto up = level_index(l.upper);
                const auto lo = level_index(l.lower);
                const std::size_t other = up == cur ? lo : (lo == cur ? up : cur);
                if (other != cur && !seen[other]) {
                    seen[other] = true;
                    stack.push_back(other);
                }
            }
        }
        for (std::size_t i = 0; i < levels_.size(); ++i)
            if (!seen[i])
                throw std::invalid_argument("level '" + levels_[i].name + "' is not connected by any line");
    }
}

namespace
{

// NIST ASD level energies for Ba II, cm^-1.
constexpr double kBaD32 = 4873.852;
constexpr double kBaD52 = 5674.807;
constexpr double kBaP12 = 20261.561;
constexpr double kBaP32 = 21952.404;

double line_wavelength(double upper_cm, double lower_cm)
{
    return 1.0 / ((upper_cm - lower_cm) * 100.0);
}

} // namespace

LevelScheme builtin_barium(const BariumBranching& b)
{
    const double tau_p12 = 8e-9;
    const double tau_p32 = 6.3e-9;
    if (b.p12_to_s < 0.0 || b.p12_to_s > 1.0)
        throw std::invalid_argument("P1/2 -> S1/2 branching must lie in [0,1]");
    if (std::abs(b.p32_to_s + b.p32_to_d52 + b.p32_to_d32 - 1.0) > 1e-9)
        throw std::invalid_argument("P3/2 branching fractions must sum to 1");

    std::vector<Level> levels{
        {"S1/2", 0.0, std::numeric_limits<double>::infinity(), 0.5},
        {"P1/2", wavenumber_to_joule(kBaP12), tau_p12, 0.5},
        {"P3/2", wavenumber_to_joule(kBaP32), tau_p32, 1.5},
        {"D3/2", wavenumber_to_joule(kBaD32), std::numeric_limits<double>::infinity(), 1.5},
        {"D5/2", wavenumber_to_joule(kBaD52), std::numeric_limits<double>::infinity(), 2.5},
    };

    std::vector<TransitionLine> lines{
        {"P1/2", "S1/2", line_wavelength(kBaP12, 0.0), kTwoPi * 15e6, b.p12_to_s},
        {"P3/2", "S1/2", line_wavelength(kBaP32, 0.0), kTwoPi * 18e6, b.p32_to_s},
        {"P1/2", "D3/2", line_wavelength(kBaP12, kBaD32), (1.0 - b.p12_to_s) / tau_p12, 1.0 - b.p12_to_s},
        {"P3/2", "D3/2", line_wavelength(kBaP32, kBaD32), b.p32_to_d32 / tau_p32, b.p32_to_d32},
        {"P3/2", "D5/2", line_wavelength(kBaP32, kBaD52), b.p32_to_d52 / tau_p32, b.p32_to_d52},
    };
    return {"138Ba+", 137.905 * Const::atomic_mass_unit, std::move(levels), std::move(lines)};
}

double partial_linewidth(const LevelScheme& scheme, std::string_view upper, std::string_view lower)
{
    for (const auto& l : scheme.lines())
        if (l.upper == upper && l.lower == lower)
            return l.branching_fraction / scheme.level(upper).lifetime;
    throw std::invalid_argument("no line " + std::string(upper) + " -> " + std::string(lower));
}

LevelScheme parse_species(const std::string& json_text)
{
    using nlohmann::json;
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("species file: ") + e.what());
    }
    try {
        std::vector<Level> levels;
        for (const auto& jl : doc.at("levels")) {
            Level lv;
            lv.name = jl.at("name").get<std::string>();
            if (jl.contains("energy_cm1"))
                lv.energy = wavenumber_to_joule(jl.at("energy_cm1").get<double>());
            else
                lv.energy = jl.at("energy_j").get<double>();
            if (jl.contains("lifetime_s") && !jl.at("lifetime_s").is_null())
                lv.lifetime = jl.at("lifetime_s").get<double>();
            lv.j = jl.at("j").get<double>();
            levels.push_back(std::move(lv));
        }
        std::vector<TransitionLine> lines;
        for (const auto& jt : doc.at("lines")) {
            TransitionLine t;
            t.upper = jt.at("upper").get<std::string>();
            t.lower = jt.at("lower").get<std::string>();
            t.branching_fraction = jt.at("branching_fraction").get<double>();
            t.linewidth = jt.value("linewidth_rad_s", 0.0);
            lines.push_back(std::move(t));
        }
        // Wavelengths default to the level energy difference.
        const auto energy_of = [&](const std::string& n) -> double {
            for (const auto& l : levels)
                if (l.name == n)
                    return l.energy;
            throw std::invalid_argument("line references unknown level '" + n + "'");
        };
        std::size_t k = 0;
        for (const auto& jt : doc.at("lines")) {
            auto& t = lines[k++];
            if (jt.contains("wavelength_m"))
                t.wavelength = jt.at("wavelength_m").get<double>();
            else
                t.wavelength = Const::planck * Const::speed_of_light / (energy_of(t.upper) - energy_of(t.lower));
        }
        double mass = doc.contains("mass_u") ? doc.at("mass_u").get<double>() * Const::atomic_mass_unit
                                             : doc.at("mass_kg").get<double>();
        return {doc.at("species").get<std::string>(), mass, std::move(levels), std::move(lines)};
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("species file: ") + e.what());
    }
}

LevelScheme load_species_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("cannot open species file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_species(ss.str());
}

std::string species_to_json(const LevelScheme& scheme)
{
    using nlohmann::json;
    json doc;
    doc["species"] = scheme.species();
    doc["mass_kg"] = scheme.mass();
    doc["levels"] = json::array();
    for (const auto& l : scheme.levels()) {
        json jl{{"name", l.name}, {"energy_j", l.energy}, {"j", l.j}};
        jl["lifetime_s"] = l.is_long_lived() ? json(nullptr) : json(l.lifetime);
        doc["levels"].push_back(jl);
    }
    doc["lines"] = json::array();
    for (const auto& t : scheme.lines())
        doc["lines"].push_back({{"upper", t.upper},
                                {"lower", t.lower},
                                {"wavelength_m", t.wavelength},
                                {"linewidth_rad_s", t.linewidth},
                                {"branching_fraction", t.branching_fraction}});
    return doc.dump(2);
}

} // namespace iontrap
