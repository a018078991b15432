#include "carbontag/energy_metrics.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "carbontag/error.hpp"

namespace carbontag {

namespace {

void check_energy_pair(double rendering, double baseline) {
    if (!std::isfinite(rendering) || !std::isfinite(baseline))
        throw DomainError("energy values must be finite");
    if (baseline <= 0.0)
        throw DomainError("baseline energy must be positive, got " + std::to_string(baseline));
}

}  // namespace

double ad_energy(double ad_rendering_energy, double baseline_energy) {
    check_energy_pair(ad_rendering_energy, baseline_energy);
    return ad_rendering_energy - baseline_energy;
}

double normalized_ad_energy(double ad_rendering_energy, double baseline_energy) {
    return ad_energy(ad_rendering_energy, baseline_energy) / baseline_energy;
}

char grade_letter(Grade g) { return static_cast<char>('A' + static_cast<int>(g)); }

std::optional<Grade> parse_grade(std::string_view s) {
    if (s.size() != 1 || s[0] < 'A' || s[0] > 'G') return std::nullopt;
    return static_cast<Grade>(s[0] - 'A');
}

void LabelScale::check() const {
    if (lower[0] != 0.0) throw DomainError("label scale must start at 0");
    for (std::size_t i = 1; i < lower.size(); ++i) {
        if (!std::isfinite(lower[i]) || !(lower[i] > lower[i - 1]))
            throw DomainError("label scale edges must be finite and strictly increasing");
    }
}

EnergyLabel assign_label(double normalized_energy, const LabelScale& scale) {
    if (!std::isfinite(normalized_energy)) throw DomainError("normalized energy must be finite");
    std::size_t bin = 0;
    for (std::size_t i = 1; i < kGradeCount; ++i) {
        if (normalized_energy >= scale.lower[i]) bin = i;
    }
    double upper = bin + 1 < kGradeCount ? scale.lower[bin + 1]
                                         : std::numeric_limits<double>::infinity();
    return {static_cast<Grade>(bin), scale.lower[bin], upper};
}

ImpactEstimate global_impact(double per_ad_energy, std::int64_t ads_per_user_per_day,
                             std::int64_t user_count) {
    if (!std::isfinite(per_ad_energy) || per_ad_energy <= 0.0 || ads_per_user_per_day <= 0 ||
        user_count <= 0)
        throw DomainError("impact inputs must be positive");
    ImpactEstimate e{};
    e.per_user_daily = per_ad_energy * static_cast<double>(ads_per_user_per_day);
    e.global_daily = e.per_user_daily * static_cast<double>(user_count);
    e.global_yearly = e.global_daily * kDaysPerYear;
    e.assumptions = {per_ad_energy, ads_per_user_per_day, user_count};
    return e;
}

}  // namespace carbontag
