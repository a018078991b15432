#include "carbontag/regression.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <json.hpp>
#include <limits>
#include <map>
#include <set>

#include "carbontag/error.hpp"
#include "carbontag/feature_select.hpp"
#include "carbontag/linalg.hpp"

namespace carbontag {

namespace {

std::string utc_now_iso() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

LinearModel::LinearModel(double intercept, std::vector<FeatureSpec> features, std::vector<double> coefficients,
                         std::string version, TrainingProvenance trained_on)
    : intercept_(intercept),
      features_(std::move(features)),
      coefficients_(std::move(coefficients)),
      version_(std::move(version)),
      trained_on_(std::move(trained_on)) {
    if (features_.size() != coefficients_.size())
        throw ConfigError("model has " + std::to_string(features_.size()) + " features but " +
                          std::to_string(coefficients_.size()) + " coefficients");
    if (!std::isfinite(intercept_)) throw ConfigError("model intercept is not finite");
    std::set<FeatureSpec> seen;
    for (std::size_t i = 0; i < features_.size(); ++i) {
        if (!seen.insert(features_[i]).second) throw ConfigError("duplicate model feature: " + features_[i].name());
        if (!std::isfinite(coefficients_[i]))
            throw ConfigError("coefficient for " + features_[i].name() + " is not finite");
    }
}

std::optional<double> LinearModel::coefficient(const FeatureSpec& f) const {
    for (std::size_t i = 0; i < features_.size(); ++i)
        if (features_[i] == f) return coefficients_[i];
    return std::nullopt;
}

std::vector<std::size_t> LinearModel::required_parameters() const {
    std::set<std::size_t> idx;
    for (const auto& f : features_) idx.insert(f.factors().begin(), f.factors().end());
    return {idx.begin(), idx.end()};
}

LinearModel LinearModel::with_version(std::string version) const {
    LinearModel copy = *this;
    copy.version_ = std::move(version);
    return copy;
}

LinearModel fit_ols(const Dataset& dataset, std::span<const FeatureSpec> features, std::string version) {
    const std::size_t n = dataset.size();
    const std::size_t p = features.size();
    if (n <= p)
        throw InsufficientDataError("OLS needs more samples than features (" + std::to_string(n) + " samples, " +
                                    std::to_string(p) + " features)");

    linalg::Matrix x(n, p + 1);
    for (std::size_t i = 0; i < n; ++i) x(i, 0) = 1.0;
    for (std::size_t c = 0; c < p; ++c) {
        auto col = feature_column(dataset, features[c]);
        std::copy(col.begin(), col.end(), x.col(c + 1).begin());
    }
    const auto y = dataset.targets();
    auto sol = linalg::least_squares(x, y, 1e-10);
    if (!sol.dependent.empty()) {
        std::vector<std::string> names;
        for (auto c : sol.dependent) names.push_back(c == 0 ? "(intercept)" : features[c - 1].name());
        std::string msg = "design matrix is rank deficient; dependent columns:";
        for (const auto& nm : names) msg += " " + nm;
        throw SingularityError(msg, std::move(names));
    }
    std::vector<double> coefs(sol.coefficients.begin() + 1, sol.coefficients.end());
    TrainingProvenance prov{dataset.fingerprint(), n, utc_now_iso()};
    return LinearModel(sol.coefficients[0], {features.begin(), features.end()}, std::move(coefs), std::move(version),
                       std::move(prov));
}

double predict(const LinearModel& model, const AdRenderMetrics& metrics) {
    double y = model.intercept();
    const auto features = model.features();
    const auto coefs = model.coefficients();
    for (std::size_t i = 0; i < features.size(); ++i) y += coefs[i] * evaluate_feature(features[i], metrics);
    return y;
}

double r2(std::span<const double> predicted, std::span<const double> actual) {
    if (predicted.size() != actual.size()) throw DomainError("r2: length mismatch");
    if (actual.size() < 2) throw DomainError("r2: need at least 2 observations");
    double mean = 0.0;
    for (double a : actual) mean += a;
    mean /= static_cast<double>(actual.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        ss_res += (actual[i] - predicted[i]) * (actual[i] - predicted[i]);
        ss_tot += (actual[i] - mean) * (actual[i] - mean);
    }
    if (ss_tot == 0.0) return ss_res == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity();
    return 1.0 - ss_res / ss_tot;
}

double rmse(std::span<const double> predicted, std::span<const double> actual) {
    if (predicted.size() != actual.size()) throw DomainError("rmse: length mismatch");
    if (actual.empty()) throw DomainError("rmse: empty input");
    double s = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) s += (actual[i] - predicted[i]) * (actual[i] - predicted[i]);
    return std::sqrt(s / static_cast<double>(actual.size()));
}

namespace {

ValidationReport report_for(const std::vector<double>& pred, const std::vector<double>& actual,
                            std::optional<std::string> device) {
    ValidationReport r;
    r.n = actual.size();
    r.rmse = rmse(pred, actual);
    r.r2 = actual.size() >= 2 ? r2(pred, actual) : std::numeric_limits<double>::quiet_NaN();
    r.device_id = std::move(device);
    return r;
}

}  // namespace

ValidationSummary validate(const LinearModel& model, const Dataset& dataset) {
    if (dataset.empty()) throw DomainError("cannot validate on an empty dataset");
    std::vector<double> pred, actual;
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_device;
    for (const auto& s : dataset.samples()) {
        double p = predict(model, s.metrics);
        pred.push_back(p);
        actual.push_back(s.normalized_energy);
        auto& [dp, da] = by_device[s.device_id];
        dp.push_back(p);
        da.push_back(s.normalized_energy);
    }
    ValidationSummary out;
    out.overall = report_for(pred, actual, std::nullopt);
    for (const auto& dev : dataset.devices()) {
        const auto& [dp, da] = by_device.at(dev);
        out.per_device.push_back(report_for(dp, da, dev));
    }
    return out;
}

std::string ValidationSummary::to_json_text() const {
    using Json = nlohmann::json;
    auto row = [](const ValidationReport& r) {
        Json j{{"n", r.n}, {"rmse", r.rmse}};
        j["r2"] = std::isfinite(r.r2) ? Json(r.r2) : Json(nullptr);
        j["device_id"] = r.device_id ? Json(*r.device_id) : Json(nullptr);
        return j;
    };
    Json devices = Json::array();
    for (const auto& r : per_device) devices.push_back(row(r));
    return Json{{"overall", row(overall)}, {"per_device", devices}}.dump(2);
}

}  // namespace carbontag
