#include "carbontag/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <random>
#include <sstream>

#include "carbontag/error.hpp"

namespace carbontag {

namespace {

using Json = nlohmann::ordered_json;

struct DefaultShape {
    std::string_view name;
    double a;
    double b;
};

// Medians chosen to look like desktop display-ad telemetry.
constexpr DefaultShape kLogNormalDefaults[] = {
    {"usedJSHeapSize", 15.9, 0.4},            // ~8 MB
    {"totalJSHeapSize", 16.3, 0.4},           // ~12 MB
    {"screen_size", 14.545, 0.2},             // ~1920x1080
    {"duration_mean", 4.38, 0.6},             // ~80 ms
    {"transferSize_mean", 9.6, 0.8},          // ~15 kB
    {"dedodedBodySize_mean", 10.0, 0.8},
    {"redirectTime_mean", 0.69, 0.8},
    {"app_cache_mean", 0.0, 0.5},
    {"dns_mean", 1.6, 0.8},
    {"tcp_mean", 2.3, 0.6},
    {"request_mean", 3.4, 0.6},
    {"response_mean", 2.7, 0.7},
    {"ad_navigation_duration", 6.4, 0.5},     // ~600 ms
    {"ad_navigation_transferSize", 10.62, 0.4},  // ~41 kB
    {"ad_navigation_decodedBodySize", 11.0, 0.5},
    {"ad_navigation_app_cache", 0.0, 0.5},
    {"ad_navigation_dns", 1.6, 0.8},
    {"ad_navigation_tcp", 2.3, 0.6},
    {"ad_navigation_request", 3.4, 0.6},
    {"ad_navigation_response", 2.7, 0.7},
    {"ad_navigation_processing", 5.3, 0.5},
    {"ad_navigation_onLoad", 1.6, 0.6},
};

constexpr DefaultShape kPoissonDefaults[] = {
    {"entries", 40, 0},        {"entries_requested", 30, 0}, {"et_element", 1, 0},
    {"et_navigation", 1, 0},   {"et_resource", 30, 0},       {"et_mark", 2, 0},
    {"et_measure", 1, 0},      {"et_paint", 2, 0},           {"et_longtask", 1, 0},
    {"it_element", 0.5, 0},    {"it_css", 2, 0},             {"it_embed", 0.2, 0},
    {"it_img", 10, 0},         {"it_link", 2, 0},            {"it_object", 0.2, 0},
    {"it_script", 8, 0},       {"it_subdocument", 1, 0},     {"it_svg", 0.5, 0},
    {"it_xmlhttprequest", 5, 0}, {"it_navigation", 1, 0},    {"it_other", 1, 0},
};

Distribution parse_distribution(const Json& j, const std::string& field) {
    if (!j.is_object() || !j.contains("kind")) throw ConfigError("distribution for " + field + " needs a kind");
    const auto kind = j.at("kind").get<std::string>();
    auto num = [&](const char* key) {
        if (!j.contains(key) || !j.at(key).is_number())
            throw ConfigError("distribution for " + field + " needs numeric '" + key + "'");
        return j.at(key).get<double>();
    };
    if (kind == "lognormal") return Distribution::lognormal(num("mu"), num("sigma"));
    if (kind == "poisson") return Distribution::poisson(num("lambda"));
    if (kind == "uniform") return Distribution::uniform(num("low"), num("high"));
    if (kind == "constant") return Distribution::constant(num("value"));
    if (kind == "copy") {
        if (!j.contains("source")) throw ConfigError("copy distribution for " + field + " needs a source");
        return Distribution::copy_of(param_index(j.at("source").get<std::string>()));
    }
    throw ConfigError("unknown distribution kind '" + kind + "' for " + field);
}

Json distribution_json(const Distribution& d) {
    switch (d.kind) {
        case Distribution::Kind::lognormal: return {{"kind", "lognormal"}, {"mu", d.a}, {"sigma", d.b}};
        case Distribution::Kind::poisson: return {{"kind", "poisson"}, {"lambda", d.a}};
        case Distribution::Kind::uniform: return {{"kind", "uniform"}, {"low", d.a}, {"high", d.b}};
        case Distribution::Kind::constant: return {{"kind", "constant"}, {"value", d.a}};
        case Distribution::Kind::copy: return {{"kind", "copy"}, {"source", std::string(param_name(d.source))}};
    }
    return {};
}

}  // namespace

Distribution default_distribution(std::size_t param) {
    const auto name = param_name(param);
    for (const auto& d : kLogNormalDefaults)
        if (d.name == name) return Distribution::lognormal(d.a, d.b);
    for (const auto& d : kPoissonDefaults)
        if (d.name == name) return Distribution::poisson(d.a);
    return Distribution::constant(0.0);
}

const Distribution& SyntheticConfig::distribution(std::size_t param) const {
    static const auto defaults = [] {
        std::vector<Distribution> v;
        for (std::size_t p = 0; p < kParamCount; ++p) v.push_back(default_distribution(p));
        return v;
    }();
    auto it = distributions.find(param);
    return it != distributions.end() ? it->second : defaults[param];
}

void SyntheticConfig::validate() const {
    if (n < 1) throw ConfigError("n must be at least 1");
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw ConfigError("noise_sigma must be >= 0");
    if (!std::isfinite(intercept)) throw ConfigError("intercept must be finite");
    if (devices.empty()) throw ConfigError("at least one device id is required");
    for (const auto& [spec, c] : coefficients)
        if (!std::isfinite(c)) throw ConfigError("coefficient for " + spec.name() + " is not finite");
    for (const auto& [p, d] : distributions) {
        const std::string name(param_name(p));
        switch (d.kind) {
            case Distribution::Kind::lognormal:
                if (!(d.b >= 0)) throw ConfigError("lognormal sigma must be >= 0 for " + name);
                break;
            case Distribution::Kind::poisson:
                if (!(d.a > 0)) throw ConfigError("poisson lambda must be > 0 for " + name);
                break;
            case Distribution::Kind::uniform:
                if (!(d.a >= 0 && d.b > d.a)) throw ConfigError("uniform needs 0 <= low < high for " + name);
                break;
            case Distribution::Kind::constant:
                if (!(d.a >= 0)) throw ConfigError("constant must be >= 0 for " + name);
                break;
            case Distribution::Kind::copy:
                if (d.source == p || distribution(d.source).kind == Distribution::Kind::copy)
                    throw ConfigError("copy source for " + name + " must be an independently drawn field");
                break;
        }
    }
}

SyntheticConfig SyntheticConfig::from_json_text(std::string_view text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("synthetic config is not valid JSON: ") + e.what());
    }
    SyntheticConfig c;
    try {
        const auto& gt = j.at("ground_truth");
        c.intercept = gt.value("intercept", 0.0);
        if (gt.contains("coefficients")) {
            for (const auto& [name, value] : gt.at("coefficients").items())
                c.coefficients.emplace_back(FeatureSpec::parse(name), value.get<double>());
        }
        c.noise_sigma = j.value("noise_sigma", 0.0);
        auto n = j.value("n", std::int64_t{100});
        if (n < 1) throw ConfigError("n must be at least 1");
        c.n = static_cast<std::size_t>(n);
        if (j.contains("distributions")) {
            for (const auto& [name, d] : j.at("distributions").items())
                c.distributions[param_index(name)] = parse_distribution(d, name);
        }
        if (j.contains("devices")) c.devices = j.at("devices").get<std::vector<std::string>>();
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("malformed synthetic config: ") + e.what());
    }
    c.validate();
    return c;
}

SyntheticConfig SyntheticConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open synthetic config: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

std::string SyntheticConfig::to_json_text() const {
    Json coefs = Json::object();
    for (const auto& [spec, c] : coefficients) coefs[spec.name()] = c;
    Json dists = Json::object();
    for (const auto& [p, d] : distributions) dists[std::string(param_name(p))] = distribution_json(d);
    Json j{{"ground_truth", {{"intercept", intercept}, {"coefficients", coefs}}},
           {"noise_sigma", noise_sigma},
           {"n", n},
           {"distributions", dists},
           {"devices", devices}};
    return j.dump(2);
}

double linear_part(const SyntheticConfig& config, const AdRenderMetrics& metrics) {
    double y = config.intercept;
    for (const auto& [spec, c] : config.coefficients) y += c * evaluate_feature(spec, metrics);
    return y;
}

Dataset generate_synthetic(const SyntheticConfig& config, std::uint64_t seed) {
    config.validate();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<LabeledSample> samples;
    samples.reserve(config.n);
    char id[32];
    for (std::size_t i = 0; i < config.n; ++i) {
        AdRenderMetrics m = AdRenderMetrics::zeros();
        for (std::size_t p = 0; p < kParamCount; ++p) {
            const auto& d = config.distribution(p);
            double v = 0.0;
            switch (d.kind) {
                case Distribution::Kind::lognormal:
                    v = std::lognormal_distribution<double>(d.a, d.b)(rng);
                    break;
                case Distribution::Kind::poisson:
                    v = static_cast<double>(std::poisson_distribution<std::int64_t>(d.a)(rng));
                    break;
                case Distribution::Kind::uniform:
                    v = std::uniform_real_distribution<double>(d.a, d.b)(rng);
                    break;
                case Distribution::Kind::constant:
                    v = d.a;
                    break;
                case Distribution::Kind::copy:
                    break;
            }
            m.set(p, v);
        }
        for (std::size_t p = 0; p < kParamCount; ++p) {
            const auto& d = config.distribution(p);
            if (d.kind == Distribution::Kind::copy) m.set(p, m.at(d.source));
        }
        double y = linear_part(config, m) + config.noise_sigma * gauss(rng);

        LabeledSample s;
        std::snprintf(id, sizeof id, "syn-%06zu", i + 1);
        s.ad_id = id;
        s.device_id = config.devices[i % config.devices.size()];
        s.metrics = m;
        s.normalized_energy = std::max(-1.0, y);
        samples.push_back(std::move(s));
    }
    return Dataset(std::move(samples), Provenance::synthetic, seed);
}

}  // namespace carbontag
