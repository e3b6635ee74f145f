#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace iontrap
{

/// One electronic fine-structure level.
struct Level
{
    std::string name;
    double energy = 0.0;   // J above the ground level
    double lifetime = std::numeric_limits<double>::infinity(); // s
    double j = 0.5;        // total electronic angular momentum

    [[nodiscard]] bool is_long_lived() const { return lifetime == std::numeric_limits<double>::infinity(); }
};

/// Dipole transition between two levels of a scheme.
struct TransitionLine
{
    std::string upper;
    std::string lower;
    double wavelength = 0.0;        // m
    double linewidth = 0.0;         // rad/s, stored reference value
    double branching_fraction = 0.0; // fraction of upper-level decays into lower
};

/// Split of the P3/2 -> D decay between the two D manifolds.
struct BariumBranching
{
    double p12_to_s = 0.75;
    double p32_to_s = 0.75;
    double p32_to_d52 = 0.22;
    double p32_to_d32 = 0.03;
};

/**
 * Ion species with its electronic levels and dipole lines.
 *
 * Lines are indexed by position; level lookups go through names. The scheme
 * is validated on construction and immutable afterwards.
 */
class LevelScheme
{
  public:
    LevelScheme(std::string species, double mass, std::vector<Level> levels,
                std::vector<TransitionLine> lines);

    [[nodiscard]] const std::string& species() const { return species_; }
    [[nodiscard]] double mass() const { return mass_; }
    [[nodiscard]] const std::vector<Level>& levels() const { return levels_; }
    [[nodiscard]] const std::vector<TransitionLine>& lines() const { return lines_; }

    [[nodiscard]] std::size_t level_index(std::string_view name) const;
    [[nodiscard]] std::optional<std::size_t> find_level(std::string_view name) const;
    [[nodiscard]] const Level& level(std::string_view name) const { return levels_[level_index(name)]; }

    /// Line connecting the two levels, in either order.
    [[nodiscard]] const TransitionLine& line(std::string_view a, std::string_view b) const;
    [[nodiscard]] const TransitionLine* find_line(std::string_view a, std::string_view b) const;

    /// Transition angular frequency from the stored level energies.
    [[nodiscard]] double transition_frequency(const TransitionLine& line) const;

  private:
    void validate() const;

    std::string species_;
    double mass_;
    std::vector<Level> levels_;
    std::vector<TransitionLine> lines_;
};

// 138Ba+ with the S1/2, P1/2, P3/2, D3/2 and D5/2 levels.
LevelScheme builtin_barium(const BariumBranching& branching = {});

/// branching_fraction / upper.lifetime for the line upper -> lower.
double partial_linewidth(const LevelScheme& scheme, std::string_view upper, std::string_view lower);

/// Load a species document (JSON). Field names are listed in README.md.
LevelScheme load_species_file(const std::string& path);
LevelScheme parse_species(const std::string& json_text);
std::string species_to_json(const LevelScheme& scheme);

} // namespace iontrap
