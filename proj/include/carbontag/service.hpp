#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "carbontag/artifact.hpp"
#include "carbontag/energy_metrics.hpp"
#include "carbontag/estimate_log.hpp"

namespace carbontag {

/// Body of POST /v1/estimate: raw parameter values as sent by the ad tag.
struct EstimateRequest {
    std::string ad_id;
    std::optional<std::string> device_profile;
    std::map<std::string, double> parameters;
    std::string tag_version;

    /// Throws ValidationError naming the malformed field.
    static EstimateRequest from_json_text(std::string_view text);
    std::string to_json_text() const;
};

struct EstimateResponse {
    double nEad_estimate = 0.0;
    Grade label = Grade::A;
    std::string model_version;
    double processing_time = 0.0;  // microseconds

    static EstimateResponse from_json_text(std::string_view text);
    std::string to_json_text() const;
};

/// A loaded artifact plus what request validation needs from it.
struct ServingModel {
    ImportedArtifact artifact;
    std::vector<std::size_t> required_parameters;

    const LinearModel& model() const { return artifact.model; }
    const std::string& version() const { return artifact.model.version(); }
};

struct ServiceOptions {
    std::filesystem::path log_dir = "carbontag-log";
    std::size_t rotate_bytes = 64u << 20;
    bool sync_each_record = false;
    std::chrono::microseconds request_budget{100'000};
};

/// Backend for ad-tag beacons: validates parameters, evaluates the current
/// model, labels the estimate and appends the record before returning.
/// Handlers run concurrently; the model is swapped atomically.
class EstimationService {
public:
    explicit EstimationService(ServiceOptions options);

    /// Validates and installs a new artifact. On any error the previous model
    /// stays active and the error propagates.
    void load_model(std::string_view artifact_bytes);

    /// Null until a model is loaded.
    std::shared_ptr<const ServingModel> current_model() const;

    /// Throws ValidationError (client fault), UnavailableError when no model is
    /// loaded, TimeoutError when the processing budget is exceeded.
    EstimateResponse handle_estimate(const EstimateRequest& request);

    StatsSnapshot stats() const;

    const ServiceOptions& options() const { return options_; }
    std::uint64_t records_written() const { return log_.appended(); }

private:
    ServiceOptions options_;
    mutable std::mutex model_mu_;
    std::shared_ptr<const ServingModel> model_;
    EstimateLog log_;
};

/// Request validation and evaluation without persistence: the offline
/// reference the service must agree with.
AdRenderMetrics metrics_from_request(const EstimateRequest& request, const ServingModel& model);
EstimateResponse evaluate_request(const EstimateRequest& request, const ServingModel& model);

}  // namespace carbontag
