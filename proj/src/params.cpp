#include "carbontag/params.hpp"

#include "carbontag/error.hpp"

namespace carbontag {

namespace {

using K = ParamKind;

constexpr std::array<ParamInfo, kParamCount> kRegistry{{
    {"usedJSHeapSize", K::bytes},
    {"totalJSHeapSize", K::bytes},
    {"entries", K::count},
    {"entries_requested", K::count},
    {"screen_size", K::pixels},
    {"et_element", K::count},
    {"et_navigation", K::count},
    {"et_resource", K::count},
    {"et_mark", K::count},
    {"et_measure", K::count},
    {"et_paint", K::count},
    {"et_longtask", K::count},
    {"it_element", K::count},
    {"it_css", K::count},
    {"it_embed", K::count},
    {"it_img", K::count},
    {"it_link", K::count},
    {"it_object", K::count},
    {"it_script", K::count},
    {"it_subdocument", K::count},
    {"it_svg", K::count},
    {"it_xmlhttprequest", K::count},
    {"it_navigation", K::count},
    {"it_other", K::count},
    {"duration_mean", K::milliseconds},
    {"transferSize_mean", K::bytes},
    {"dedodedBodySize_mean", K::bytes},
    {"redirectTime_mean", K::milliseconds},
    {"app_cache_mean", K::milliseconds},
    {"dns_mean", K::milliseconds},
    {"tcp_mean", K::milliseconds},
    {"request_mean", K::milliseconds},
    {"response_mean", K::milliseconds},
    {"ad_navigation_duration", K::milliseconds},
    {"ad_navigation_transferSize", K::bytes},
    {"ad_navigation_decodedBodySize", K::bytes},
    {"ad_navigation_app_cache", K::milliseconds},
    {"ad_navigation_dns", K::milliseconds},
    {"ad_navigation_tcp", K::milliseconds},
    {"ad_navigation_request", K::milliseconds},
    {"ad_navigation_response", K::milliseconds},
    {"ad_navigation_processing", K::milliseconds},
    {"ad_navigation_onLoad", K::milliseconds},
}};

}  // namespace

std::span<const ParamInfo, kParamCount> parameter_registry() { return kRegistry; }

std::optional<std::size_t> find_param(std::string_view name) {
    for (std::size_t i = 0; i < kRegistry.size(); ++i) {
        if (kRegistry[i].name == name) return i;
    }
    return std::nullopt;
}

std::size_t param_index(std::string_view name) {
    if (auto idx = find_param(name)) return *idx;
    throw ConfigError("unknown parameter: " + std::string(name));
}

std::string_view param_name(std::size_t index) { return kRegistry.at(index).name; }

AdRenderMetrics AdRenderMetrics::zeros() {
    AdRenderMetrics m;
    m.present_.set();
    return m;
}

double AdRenderMetrics::at(std::size_t index) const {
    if (!present_.test(index)) throw FeatureResolutionError(std::string(param_name(index)));
    return values_[index];
}

double AdRenderMetrics::at(std::string_view name) const {
    auto idx = find_param(name);
    if (!idx) throw FeatureResolutionError(std::string(name));
    return at(*idx);
}

}  // namespace carbontag
