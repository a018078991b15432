#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "carbontag/dataset.hpp"
#include "carbontag/error.hpp"
#include "carbontag/feature_spec.hpp"
#include "carbontag/linalg.hpp"

namespace carbontag {

/// Sample Pearson correlation. Throws UndefinedCorrelationError when either
/// input is constant.
double pearson(std::span<const double> x, std::span<const double> y);

/// Population variance (divides by n).
double variance(std::span<const double> x);

/// Variance inflation factor of column j: 1 / (1 - R^2) of j regressed, with
/// intercept, on every other column. Returns +infinity when R^2 is within
/// 1e-12 of 1.
double vif(const linalg::Matrix& design, std::size_t j);

/// The fifteen parameters pre-selected by manual inspection of the lab corpus.
std::vector<std::string> default_candidate_fields();

struct SelectionConfig {
    std::vector<std::string> candidate_fields = default_candidate_fields();
    double corr_threshold = 0.8;
    double vif_threshold = 10.0;
    double variance_threshold = 0.01;
    int max_interaction_order = 3;

    static SelectionConfig from_json_text(std::string_view text);
    static SelectionConfig load(const std::string& path);
    void validate() const;
};

enum class RejectReason { low_correlation, high_vif, low_variance };

const char* to_string(RejectReason r);

struct Rejection {
    FeatureSpec feature;
    RejectReason reason;
};

struct SelectionReport {
    std::vector<FeatureSpec> selected;
    std::vector<Rejection> rejected;
    std::map<FeatureSpec, double> vif_table;
    std::map<FeatureSpec, double> correlation_table;  // |r| with nEad, 0 when undefined

    /// Audit document. Infinite VIFs serialize as null.
    std::string to_json_text() const;
};

class EmptySelectionError : public Error {
public:
    explicit EmptySelectionError(SelectionReport report)
        : Error(Errc::empty_selection, "feature selection rejected every candidate"),
          report_(std::move(report)) {}
    const SelectionReport& report() const noexcept { return report_; }

private:
    SelectionReport report_;
};

std::vector<double> feature_column(const Dataset& dataset, const FeatureSpec& spec);

/// Correlation filter, iterative VIF pruning, interaction generation (the new
/// features re-filtered by correlation and VIF together with the surviving
/// bases), then the variance filter.
SelectionReport select_features(const Dataset& dataset, const SelectionConfig& config);

}  // namespace carbontag
