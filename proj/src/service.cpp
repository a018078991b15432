#include "carbontag/service.hpp"

#include <cmath>
#include <json.hpp>

#include "carbontag/error.hpp"

namespace carbontag {

namespace {

using Json = nlohmann::json;
using Clock = std::chrono::steady_clock;

std::int64_t epoch_micros() {
    return std::chrono::duration_cast<std::chrono::microseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

Json request_json(const EstimateRequest& r) {
    Json params = Json::object();
    for (const auto& [k, v] : r.parameters) params[k] = v;
    Json j{{"ad_id", r.ad_id}, {"parameters", params}, {"tag_version", r.tag_version}};
    j["device_profile"] = r.device_profile ? Json(*r.device_profile) : Json(nullptr);
    return j;
}

Json response_json(const EstimateResponse& r) {
    return Json{{"nEad_estimate", r.nEad_estimate},
                {"label", std::string(1, grade_letter(r.label))},
                {"model_version", r.model_version},
                {"processing_time", r.processing_time}};
}

}  // namespace

EstimateRequest EstimateRequest::from_json_text(std::string_view text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::exception&) {
        throw ValidationError("request body is not valid JSON", "body");
    }
    if (!j.is_object()) throw ValidationError("request body must be a JSON object", "body");
    EstimateRequest r;
    if (!j.contains("ad_id") || !j["ad_id"].is_string()) throw ValidationError("ad_id must be a string", "ad_id");
    r.ad_id = j["ad_id"].get<std::string>();
    if (j.contains("device_profile") && !j["device_profile"].is_null()) {
        if (!j["device_profile"].is_string()) throw ValidationError("device_profile must be a string", "device_profile");
        r.device_profile = j["device_profile"].get<std::string>();
    }
    if (!j.contains("tag_version") || !j["tag_version"].is_string())
        throw ValidationError("tag_version must be a string", "tag_version");
    r.tag_version = j["tag_version"].get<std::string>();
    if (!j.contains("parameters") || !j["parameters"].is_object())
        throw ValidationError("parameters must be an object", "parameters");
    for (const auto& [name, value] : j["parameters"].items()) {
        if (!value.is_number()) throw ValidationError("parameter " + name + " must be a number", name);
        r.parameters.emplace(name, value.get<double>());
    }
    return r;
}

std::string EstimateRequest::to_json_text() const { return request_json(*this).dump(); }

EstimateResponse EstimateResponse::from_json_text(std::string_view text) {
    auto j = Json::parse(text);
    EstimateResponse r;
    r.nEad_estimate = j.at("nEad_estimate").get<double>();
    auto g = parse_grade(j.at("label").get<std::string>());
    if (!g) throw DomainError("invalid label in response");
    r.label = *g;
    r.model_version = j.at("model_version").get<std::string>();
    r.processing_time = j.at("processing_time").get<double>();
    return r;
}

std::string EstimateResponse::to_json_text() const { return response_json(*this).dump(); }

AdRenderMetrics metrics_from_request(const EstimateRequest& request, const ServingModel& model) {
    if (request.ad_id.empty()) throw ValidationError("ad_id must not be empty", "ad_id");
    AdRenderMetrics m;
    for (const auto& [name, value] : request.parameters) {
        auto idx = find_param(name);
        if (!idx) throw ValidationError("unknown parameter: " + name, name);
        if (!std::isfinite(value) || value < 0.0)
            throw ValidationError("parameter " + name + " must be finite and non-negative", name);
        m.set(*idx, value);
    }
    for (auto idx : model.required_parameters) {
        if (!m.has(idx)) {
            std::string name(param_name(idx));
            throw ValidationError("missing parameter: " + name, name);
        }
    }
    return m;
}

EstimateResponse evaluate_request(const EstimateRequest& request, const ServingModel& model) {
    const auto metrics = metrics_from_request(request, model);
    EstimateResponse r;
    r.nEad_estimate = predict(model.model(), metrics);
    r.label = assign_label(r.nEad_estimate, model.artifact.bins).grade;
    r.model_version = model.version();
    return r;
}

EstimationService::EstimationService(ServiceOptions options)
    : options_(std::move(options)), log_(options_.log_dir, options_.rotate_bytes, options_.sync_each_record) {}

void EstimationService::load_model(std::string_view artifact_bytes) {
    auto imported = import_artifact(artifact_bytes);
    auto required = imported.model.required_parameters();
    auto next = std::make_shared<const ServingModel>(ServingModel{std::move(imported), std::move(required)});
    std::lock_guard lock(model_mu_);
    model_ = std::move(next);
}

std::shared_ptr<const ServingModel> EstimationService::current_model() const {
    std::lock_guard lock(model_mu_);
    return model_;
}

EstimateResponse EstimationService::handle_estimate(const EstimateRequest& request) {
    const auto start = Clock::now();
    auto model = current_model();  // pinned for the whole request
    if (!model) throw UnavailableError("no model loaded");

    auto response = evaluate_request(request, *model);
    const auto elapsed = Clock::now() - start;
    if (elapsed > options_.request_budget) throw TimeoutError("request exceeded the processing budget");
    response.processing_time = std::chrono::duration<double, std::micro>(elapsed).count();

    Json record{{"timestamp", epoch_micros()}, {"request", request_json(request)}, {"response", response_json(response)}};
    log_.append(record.dump());
    return response;
}

StatsSnapshot EstimationService::stats() const { return scan_estimate_log(options_.log_dir); }

}  // namespace carbontag
