#include "carbontag/error.hpp"

namespace carbontag {

const char* to_string(Errc code) {
    switch (code) {
        case Errc::domain: return "domain";
        case Errc::schema: return "schema";
        case Errc::parse: return "parse";
        case Errc::config: return "config";
        case Errc::io: return "io";
        case Errc::feature_resolution: return "feature_resolution";
        case Errc::undefined_correlation: return "undefined_correlation";
        case Errc::singularity: return "singularity";
        case Errc::insufficient_data: return "insufficient_data";
        case Errc::empty_selection: return "empty_selection";
        case Errc::integrity: return "integrity";
        case Errc::version: return "version";
        case Errc::size_budget: return "size_budget";
        case Errc::validation: return "validation";
        case Errc::unavailable: return "unavailable";
        case Errc::timeout: return "timeout";
    }
    return "unknown";
}

SizeBudgetError::SizeBudgetError(std::size_t size, std::size_t budget)
    : Error(Errc::size_budget,
            "artifact is " + std::to_string(size) + " bytes, " + std::to_string(size - budget) +
                " over the " + std::to_string(budget) + " byte budget"),
      size_(size),
      budget_(budget) {}

}  // namespace carbontag
