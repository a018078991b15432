#pragma once

#include <array>
#include <bitset>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace carbontag {

enum class ParamKind { count, bytes, milliseconds, pixels };

struct ParamInfo {
    std::string_view name;
    ParamKind kind;
};

/// Number of browser-observable parameters collected per ad.
inline constexpr std::size_t kParamCount = 43;

/// The canonical parameter registry. Its order is the column order of the
/// measurement CSV and the sort order of feature factors.
std::span<const ParamInfo, kParamCount> parameter_registry();

std::optional<std::size_t> find_param(std::string_view name);

/// Like find_param but throws ConfigError for unknown names.
std::size_t param_index(std::string_view name);

std::string_view param_name(std::size_t index);

/// Per-ad parameter record. Tracks which fields were supplied so that
/// partially populated records (service requests) can report the missing one.
class AdRenderMetrics {
public:
    AdRenderMetrics() = default;

    /// Every field present and zero.
    static AdRenderMetrics zeros();

    bool has(std::size_t index) const { return present_.test(index); }
    bool complete() const { return present_.all(); }

    /// Throws FeatureResolutionError when the field was never set.
    double at(std::size_t index) const;
    double at(std::string_view name) const;

    void set(std::size_t index, double value) {
        values_[index] = value;
        present_.set(index);
    }
    void set(std::string_view name, double value) { set(param_index(name), value); }

    std::span<const double, kParamCount> values() const { return values_; }

    friend bool operator==(const AdRenderMetrics&, const AdRenderMetrics&) = default;

private:
    std::array<double, kParamCount> values_{};
    std::bitset<kParamCount> present_{};
};

}  // namespace carbontag
