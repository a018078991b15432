#include "carbontag/feature_select.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <set>
#include <sstream>

namespace carbontag {

namespace {

using Json = nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();

double mean_of(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DomainError("pearson: length mismatch");
    if (x.size() < 2) throw DomainError("pearson: need at least 2 observations");
    const double mx = mean_of(x);
    const double my = mean_of(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw UndefinedCorrelationError("pearson: constant input");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double variance(std::span<const double> x) {
    if (x.empty()) throw DomainError("variance of an empty vector");
    const double m = mean_of(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size());
}

double vif(const linalg::Matrix& design, std::size_t j) {
    const std::size_t n = design.rows();
    const std::size_t m = design.cols();
    if (m < 2) throw DomainError("vif: need at least 2 columns");
    if (n <= m) throw InsufficientDataError("vif: need more rows than columns");
    if (j >= m) throw DomainError("vif: column index out of range");

    auto target = design.col(j);
    const double mean = mean_of(target);
    double ss_tot = 0.0;
    for (double v : target) ss_tot += (v - mean) * (v - mean);
    if (ss_tot == 0.0) throw DomainError("vif: constant column");

    linalg::Matrix others(n, m);  // intercept + the m-1 other columns
    for (std::size_t i = 0; i < n; ++i) others(i, 0) = 1.0;
    for (std::size_t c = 0, k = 1; c < m; ++c) {
        if (c == j) continue;
        std::copy(design.col(c).begin(), design.col(c).end(), others.col(k).begin());
        ++k;
    }
    auto fit = linalg::least_squares(others, target);
    double ss_res = 0.0;
    for (double r : fit.residuals) ss_res += r * r;
    if (ss_res <= 1e-12 * ss_tot) return kInf;
    return std::max(1.0, ss_tot / ss_res);
}

std::vector<std::string> default_candidate_fields() {
    return {"screen_size",       "totalJSHeapSize",        "entries",
            "et_paint",          "et_resource",            "it_xmlhttprequest",
            "it_img",            "it_script",              "ad_navigation_duration",
            "ad_navigation_processing", "ad_navigation_onLoad", "duration_mean",
            "redirectTime_mean", "request_mean",           "response_mean"};
}

void SelectionConfig::validate() const {
    if (candidate_fields.empty()) throw ConfigError("candidate_fields must not be empty");
    std::set<std::string> seen;
    for (const auto& f : candidate_fields) {
        param_index(f);
        if (!seen.insert(f).second) throw ConfigError("duplicate candidate field: " + f);
    }
    if (!(corr_threshold >= 0.0 && corr_threshold <= 1.0)) throw ConfigError("corr_threshold must lie in [0, 1]");
    if (!(vif_threshold > 0.0)) throw ConfigError("vif_threshold must be positive");
    if (!(variance_threshold >= 0.0) || !std::isfinite(variance_threshold))
        throw ConfigError("variance_threshold must be a finite non-negative number");
    if (max_interaction_order < 1 || max_interaction_order > 3)
        throw ConfigError("max_interaction_order must be 1, 2 or 3");
}

SelectionConfig SelectionConfig::from_json_text(std::string_view text) {
    SelectionConfig c;
    try {
        auto j = Json::parse(text);
        if (j.contains("candidate_fields")) c.candidate_fields = j.at("candidate_fields").get<std::vector<std::string>>();
        c.corr_threshold = j.value("corr_threshold", c.corr_threshold);
        if (j.contains("vif_threshold")) {
            const auto& v = j.at("vif_threshold");
            if (v.is_null() || (v.is_string() && v.get<std::string>() == "inf"))
                c.vif_threshold = kInf;
            else
                c.vif_threshold = v.get<double>();
        }
        c.variance_threshold = j.value("variance_threshold", c.variance_threshold);
        c.max_interaction_order = j.value("max_interaction_order", c.max_interaction_order);
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("malformed selection config: ") + e.what());
    }
    c.validate();
    return c;
}

SelectionConfig SelectionConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open selection config: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

const char* to_string(RejectReason r) {
    switch (r) {
        case RejectReason::low_correlation: return "low_correlation";
        case RejectReason::high_vif: return "high_vif";
        case RejectReason::low_variance: return "low_variance";
    }
    return "unknown";
}

std::string SelectionReport::to_json_text() const {
    auto finite_or_null = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
    Json selected_j = Json::array();
    for (const auto& f : selected) {
        Json item{{"name", f.name()}, {"factors", f.factor_names()}};
        if (auto it = vif_table.find(f); it != vif_table.end()) item["vif"] = finite_or_null(it->second);
        if (auto it = correlation_table.find(f); it != correlation_table.end()) item["correlation"] = it->second;
        selected_j.push_back(std::move(item));
    }
    Json rejected_j = Json::array();
    for (const auto& r : rejected)
        rejected_j.push_back({{"name", r.feature.name()}, {"factors", r.feature.factor_names()}, {"reason", to_string(r.reason)}});
    Json vif_j = Json::object();
    for (const auto& [f, v] : vif_table) vif_j[f.name()] = finite_or_null(v);
    Json corr_j = Json::object();
    for (const auto& [f, v] : correlation_table) corr_j[f.name()] = v;
    Json doc{{"selected", selected_j}, {"rejected", rejected_j}, {"vif_table", vif_j}, {"correlations", corr_j}};
    return doc.dump(2);
}

std::vector<double> feature_column(const Dataset& dataset, const FeatureSpec& spec) {
    std::vector<double> x;
    x.reserve(dataset.size());
    for (const auto& s : dataset.samples()) x.push_back(evaluate_feature(spec, s.metrics));
    return x;
}

namespace {

class Selector {
public:
    Selector(const Dataset& dataset, const SelectionConfig& config)
        : dataset_(dataset), config_(config), target_(dataset.targets()) {}

    SelectionReport run() {
        std::vector<FeatureSpec> bases;
        for (const auto& name : config_.candidate_fields) bases.push_back(FeatureSpec::parse(name));
        std::sort(bases.begin(), bases.end());

        auto pool = correlation_filter(bases);
        pool = prune_by_vif(std::move(pool));

        if (config_.max_interaction_order >= 2 && pool.size() >= 2) {
            std::vector<std::string> names;
            for (const auto& f : pool) names.push_back(f.name());
            std::vector<FeatureSpec> products;
            for (auto& f : generate_interactions(names, config_.max_interaction_order))
                if (f.order() >= 2) products.push_back(std::move(f));
            auto passing = correlation_filter(products);
            pool.insert(pool.end(), passing.begin(), passing.end());
            std::sort(pool.begin(), pool.end());
            pool = prune_by_vif(std::move(pool));
        }

        std::vector<FeatureSpec> kept;
        for (auto& f : pool) {
            if (variance(column(f)) < config_.variance_threshold)
                reject(f, RejectReason::low_variance);
            else
                kept.push_back(std::move(f));
        }
        std::sort(kept.begin(), kept.end());

        auto final_vifs = compute_vifs(kept);
        for (std::size_t i = 0; i < kept.size(); ++i) report_.vif_table[kept[i]] = final_vifs[i];
        report_.selected = std::move(kept);
        if (report_.selected.empty()) throw EmptySelectionError(std::move(report_));
        return std::move(report_);
    }

private:
    const std::vector<double>& column(const FeatureSpec& f) {
        auto it = columns_.find(f);
        if (it == columns_.end()) it = columns_.emplace(f, feature_column(dataset_, f)).first;
        return it->second;
    }

    void reject(const FeatureSpec& f, RejectReason why) { report_.rejected.push_back({f, why}); }

    std::vector<FeatureSpec> correlation_filter(const std::vector<FeatureSpec>& candidates) {
        std::vector<FeatureSpec> out;
        for (const auto& f : candidates) {
            const auto& x = column(f);
            double r = 0.0;
            try {
                r = std::abs(pearson(x, target_));
            } catch (const UndefinedCorrelationError&) {
                r = 0.0;
            }
            report_.correlation_table[f] = r;
            if (r < config_.corr_threshold) {
                reject(f, RejectReason::low_correlation);
            } else if (variance(x) == 0.0) {
                // constant columns have no VIF; the variance stage would drop them anyway
                reject(f, RejectReason::low_variance);
            } else {
                out.push_back(f);
            }
        }
        return out;
    }

    std::vector<double> compute_vifs(const std::vector<FeatureSpec>& features) {
        const std::size_t m = features.size();
        if (m == 0) return {};
        if (m == 1) return {1.0};
        const std::size_t n = dataset_.size();
        if (n <= m) throw InsufficientDataError("VIF needs more samples than features (" + std::to_string(n) +
                                                " samples, " + std::to_string(m) + " features)");
        linalg::Matrix design(n, m);
        for (std::size_t c = 0; c < m; ++c) {
            const auto& x = column(features[c]);
            std::copy(x.begin(), x.end(), design.col(c).begin());
        }
        std::vector<double> out(m);
        for (std::size_t c = 0; c < m; ++c) out[c] = vif(design, c);
        return out;
    }

    std::vector<FeatureSpec> prune_by_vif(std::vector<FeatureSpec> features) {
        while (features.size() >= 2) {
            auto vifs = compute_vifs(features);
            // ties go to the feature later in canonical order
            std::size_t worst = 0;
            for (std::size_t i = 1; i < vifs.size(); ++i)
                if (vifs[i] >= vifs[worst]) worst = i;
            if (!(vifs[worst] > config_.vif_threshold)) break;
            report_.vif_table[features[worst]] = vifs[worst];
            reject(features[worst], RejectReason::high_vif);
            features.erase(features.begin() + static_cast<std::ptrdiff_t>(worst));
        }
        return features;
    }

    const Dataset& dataset_;
    const SelectionConfig& config_;
    std::vector<double> target_;
    std::map<FeatureSpec, std::vector<double>> columns_;
    SelectionReport report_;
};

}  // namespace

SelectionReport select_features(const Dataset& dataset, const SelectionConfig& config) {
    config.validate();
    if (dataset.size() < 2) throw InsufficientDataError("feature selection needs at least 2 samples");
    return Selector(dataset, config).run();
}

}  // namespace carbontag
