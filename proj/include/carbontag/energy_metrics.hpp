#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace carbontag {

// All energies are kWh.

/// Energy attributable to the ad: rendering energy minus baseline energy.
/// May be negative when the rendering run measured below baseline.
double ad_energy(double ad_rendering_energy, double baseline_energy);

/// Ad energy relative to the device's baseline energy (dimensionless).
double normalized_ad_energy(double ad_rendering_energy, double baseline_energy);

enum class Grade : std::uint8_t { A, B, C, D, E, F, G };

inline constexpr std::size_t kGradeCount = 7;

char grade_letter(Grade g);
std::optional<Grade> parse_grade(std::string_view s);

/// Lower edges of the seven label bins, grade A first. Bin i covers
/// [lower[i], lower[i+1]); the last bin is unbounded above.
struct LabelScale {
    std::array<double, kGradeCount> lower{0.0, 1.0, 3.0, 6.0, 10.0, 15.0, 25.0};

    static LabelScale standard() { return {}; }
    /// Throws DomainError unless the edges start at 0 and strictly increase.
    void check() const;

    friend bool operator==(const LabelScale&, const LabelScale&) = default;
};

struct EnergyLabel {
    Grade grade;
    double bin_lower;
    double bin_upper;  // +infinity for G
};

/// Negative values clamp to A; non-finite input is a DomainError.
EnergyLabel assign_label(double normalized_energy, const LabelScale& scale = LabelScale::standard());

struct ImpactAssumptions {
    double per_ad_energy;
    std::int64_t ads_per_user_per_day;
    std::int64_t user_count;
};

struct ImpactEstimate {
    double per_user_daily;  // kWh/day
    double global_daily;    // kWh/day
    double global_yearly;   // kWh/year
    ImpactAssumptions assumptions;
};

inline constexpr double kDaysPerYear = 365.0;

ImpactEstimate global_impact(double per_ad_energy, std::int64_t ads_per_user_per_day,
                             std::int64_t user_count);

}  // namespace carbontag
