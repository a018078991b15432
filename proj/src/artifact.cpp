#include "carbontag/artifact.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "carbontag/checksum.hpp"
#include "carbontag/error.hpp"

namespace carbontag {

namespace {

using Json = nlohmann::json;

constexpr std::string_view kPrefix = "{\"checksum\":\"";
constexpr std::string_view kMiddle = "\",\"payload\":";

void append_number(std::string& out, double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    out.append(buf, res.ptr);
}

void append_string(std::string& out, std::string_view s) {
    // nlohmann's escaping is canonical and keeps UTF-8 as-is
    out += Json(std::string(s)).dump();
}

}  // namespace

std::string canonical_payload(const LinearModel& model, const LabelScale& bins, std::string_view format) {
    std::string out;
    out.reserve(256 + model.features().size() * 96);
    out += "{\"artifact_version\":";
    append_string(out, format);
    out += ",\"coefficients\":[";
    for (std::size_t i = 0; i < model.coefficients().size(); ++i) {
        if (i) out += ',';
        append_number(out, model.coefficients()[i]);
    }
    out += "],\"features\":[";
    for (std::size_t i = 0; i < model.features().size(); ++i) {
        const auto& f = model.features()[i];
        if (i) out += ',';
        out += "{\"factors\":[";
        auto names = f.factor_names();
        for (std::size_t k = 0; k < names.size(); ++k) {
            if (k) out += ',';
            append_string(out, names[k]);
        }
        out += "],\"name\":";
        append_string(out, f.name());
        out += '}';
    }
    out += "],\"intercept\":";
    append_number(out, model.intercept());
    out += ",\"label_bins\":[";
    for (std::size_t i = 0; i < bins.lower.size(); ++i) {
        if (i) out += ',';
        append_number(out, bins.lower[i]);
    }
    out += "],\"model_version\":";
    append_string(out, model.version());
    out += '}';
    return out;
}

std::string seal_payload(std::string_view payload) {
    std::string out;
    out.reserve(payload.size() + 64);
    out += kPrefix;
    out += fnv1a_128_hex(payload);
    out += kMiddle;
    out += payload;
    out += '}';
    return out;
}

std::string export_artifact(const LinearModel& model, const LabelScale& bins) {
    bins.check();
    auto doc = seal_payload(canonical_payload(model, bins));
    if (doc.size() > kArtifactByteBudget) throw SizeBudgetError(doc.size(), kArtifactByteBudget);
    return doc;
}

ImportedArtifact import_artifact(std::string_view bytes) {
    while (!bytes.empty() && (bytes.back() == '\n' || bytes.back() == '\r')) bytes.remove_suffix(1);
    const std::size_t header = kPrefix.size() + 32 + kMiddle.size();
    if (bytes.size() < header + 2 || !bytes.starts_with(kPrefix) ||
        bytes.substr(kPrefix.size() + 32, kMiddle.size()) != kMiddle || bytes.back() != '}')
        throw IntegrityError("malformed artifact envelope");
    const auto checksum = bytes.substr(kPrefix.size(), 32);
    const auto payload = bytes.substr(header, bytes.size() - header - 1);
    if (fnv1a_128_hex(payload) != checksum) throw IntegrityError("artifact checksum mismatch");

    Json j;
    try {
        j = Json::parse(payload);
    } catch (const Json::exception& e) {
        throw IntegrityError(std::string("artifact payload is not valid JSON: ") + e.what());
    }
    try {
        const auto format = j.at("artifact_version").get<std::string>();
        if (format != kArtifactFormat) throw VersionError("unsupported artifact version: " + format);

        std::vector<FeatureSpec> features;
        for (const auto& f : j.at("features")) {
            std::vector<std::size_t> idx;
            for (const auto& name : f.at("factors")) idx.push_back(param_index(name.get<std::string>()));
            FeatureSpec spec(std::move(idx));
            if (spec.name() != f.at("name").get<std::string>())
                throw IntegrityError("feature name does not match its factors: " + f.at("name").get<std::string>());
            features.push_back(std::move(spec));
        }
        auto coefs = j.at("coefficients").get<std::vector<double>>();
        LabelScale bins;
        auto lower = j.at("label_bins").get<std::vector<double>>();
        if (lower.size() != bins.lower.size()) throw IntegrityError("artifact must carry 7 label bins");
        std::copy(lower.begin(), lower.end(), bins.lower.begin());
        bins.check();
        LinearModel model(j.at("intercept").get<double>(), std::move(features), std::move(coefs),
                          j.at("model_version").get<std::string>());
        return {std::move(model), bins, std::string(checksum)};
    } catch (const Json::exception& e) {
        throw IntegrityError(std::string("artifact payload does not match the schema: ") + e.what());
    } catch (const ConfigError& e) {
        throw IntegrityError(std::string("artifact content is invalid: ") + e.what());
    } catch (const DomainError& e) {
        throw IntegrityError(std::string("artifact content is invalid: ") + e.what());
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write file: " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace carbontag
