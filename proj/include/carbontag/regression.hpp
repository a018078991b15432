#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "carbontag/dataset.hpp"
#include "carbontag/feature_spec.hpp"

namespace carbontag {

struct TrainingProvenance {
    std::string dataset_id;
    std::size_t sample_count = 0;
    std::string timestamp;  // ISO-8601 UTC
};

/// Intercept plus one coefficient per feature, in feature order. Immutable
/// once constructed.
class LinearModel {
public:
    /// Throws ConfigError on duplicate features, a length mismatch or a
    /// non-finite coefficient.
    LinearModel(double intercept, std::vector<FeatureSpec> features, std::vector<double> coefficients,
                std::string version = "unversioned", TrainingProvenance trained_on = {});

    double intercept() const { return intercept_; }
    std::span<const FeatureSpec> features() const { return features_; }
    std::span<const double> coefficients() const { return coefficients_; }
    std::optional<double> coefficient(const FeatureSpec& f) const;
    const std::string& version() const { return version_; }
    const TrainingProvenance& trained_on() const { return trained_on_; }

    /// Registry indices of every base parameter a request must supply.
    std::vector<std::size_t> required_parameters() const;

    LinearModel with_version(std::string version) const;

private:
    double intercept_;
    std::vector<FeatureSpec> features_;
    std::vector<double> coefficients_;
    std::string version_;
    TrainingProvenance trained_on_;
};

/// Least squares fit of nEad on the evaluated features with an intercept.
/// Features are used at raw scale. Throws InsufficientDataError when there are
/// no more samples than features and SingularityError when a feature column is
/// linearly dependent on the others.
LinearModel fit_ols(const Dataset& dataset, std::span<const FeatureSpec> features,
                    std::string version = "unversioned");

/// intercept + sum(coef * feature), accumulated in feature order.
double predict(const LinearModel& model, const AdRenderMetrics& metrics);

double r2(std::span<const double> predicted, std::span<const double> actual);
double rmse(std::span<const double> predicted, std::span<const double> actual);

struct ValidationReport {
    double r2 = 0.0;  // NaN when n < 2
    double rmse = 0.0;
    std::size_t n = 0;
    std::optional<std::string> device_id;
};

struct ValidationSummary {
    ValidationReport overall;
    std::vector<ValidationReport> per_device;  // order of first appearance

    std::string to_json_text() const;
};

ValidationSummary validate(const LinearModel& model, const Dataset& dataset);

}  // namespace carbontag
