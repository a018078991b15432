#include "carbontag/feature_spec.hpp"

#include <algorithm>
#include <set>

#include "carbontag/error.hpp"

namespace carbontag {

FeatureSpec::FeatureSpec(std::vector<std::size_t> factors) : factors_(std::move(factors)) {
    if (factors_.empty() || factors_.size() > 3)
        throw ConfigError("a feature needs between 1 and 3 factors");
    std::sort(factors_.begin(), factors_.end());
    if (std::adjacent_find(factors_.begin(), factors_.end()) != factors_.end())
        throw ConfigError("repeated factor in feature");
    for (std::size_t i = 0; i < factors_.size(); ++i) {
        if (factors_[i] >= kParamCount) throw ConfigError("factor index out of range");
        if (i) name_ += kProductSeparator;
        name_ += param_name(factors_[i]);
    }
}

namespace {

std::vector<std::size_t> indices_of(std::initializer_list<std::string_view> names) {
    std::vector<std::size_t> idx;
    for (auto n : names) idx.push_back(param_index(n));
    return idx;
}

}  // namespace

FeatureSpec::FeatureSpec(std::initializer_list<std::string_view> names) : FeatureSpec(indices_of(names)) {}

FeatureSpec FeatureSpec::parse(std::string_view name) {
    std::vector<std::size_t> idx;
    std::size_t start = 0;
    while (true) {
        std::size_t cut = name.find(kProductSeparator, start);
        std::size_t star = name.find('*', start);
        std::size_t skip = kProductSeparator.size();
        if (star < cut) {
            cut = star;
            skip = 1;
        }
        auto token = name.substr(start, cut == std::string_view::npos ? std::string_view::npos : cut - start);
        if (token.empty()) throw ConfigError("malformed feature name: " + std::string(name));
        idx.push_back(param_index(token));
        if (cut == std::string_view::npos) break;
        start = cut + skip;
    }
    return FeatureSpec(std::move(idx));
}

std::vector<std::string> FeatureSpec::factor_names() const {
    std::vector<std::string> out;
    for (auto f : factors_) out.emplace_back(param_name(f));
    return out;
}

std::strong_ordering operator<=>(const FeatureSpec& a, const FeatureSpec& b) {
    if (auto c = a.factors_.size() <=> b.factors_.size(); c != 0) return c;
    return a.factors_ <=> b.factors_;
}

double evaluate_feature(const FeatureSpec& spec, const AdRenderMetrics& metrics) {
    auto f = spec.factors();
    double v = metrics.at(f[0]);
    for (std::size_t i = 1; i < f.size(); ++i) v *= metrics.at(f[i]);
    return v;
}

std::vector<FeatureSpec> generate_interactions(std::span<const std::string> fields, int max_order) {
    if (max_order < 1 || max_order > 3) throw ConfigError("interaction order must be 1, 2 or 3");
    std::vector<std::size_t> base;
    std::set<std::size_t> seen;
    for (const auto& f : fields) {
        auto idx = param_index(f);
        if (!seen.insert(idx).second) throw ConfigError("duplicate field: " + f);
        base.push_back(idx);
    }
    std::sort(base.begin(), base.end());

    std::vector<FeatureSpec> out;
    const std::size_t n = base.size();
    for (std::size_t i = 0; i < n; ++i) out.emplace_back(std::vector{base[i]});
    if (max_order >= 2) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) out.emplace_back(std::vector{base[i], base[j]});
    }
    if (max_order >= 3) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                for (std::size_t k = j + 1; k < n; ++k)
                    out.emplace_back(std::vector{base[i], base[j], base[k]});
    }
    return out;
}

}  // namespace carbontag
