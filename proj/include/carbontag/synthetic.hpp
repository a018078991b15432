#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "carbontag/dataset.hpp"
#include "carbontag/feature_spec.hpp"

namespace carbontag {

struct Distribution {
    enum class Kind { lognormal, poisson, uniform, constant, copy };
    Kind kind = Kind::constant;
    double a = 0.0;  // lognormal mu, poisson lambda, uniform low, constant value
    double b = 0.0;  // lognormal sigma, uniform high
    std::size_t source = 0;  // copy: registry index of the copied field

    static Distribution lognormal(double mu, double sigma) { return {Kind::lognormal, mu, sigma, 0}; }
    static Distribution poisson(double lambda) { return {Kind::poisson, lambda, 0.0, 0}; }
    static Distribution uniform(double low, double high) { return {Kind::uniform, low, high, 0}; }
    static Distribution constant(double value) { return {Kind::constant, value, 0.0, 0}; }
    static Distribution copy_of(std::size_t field) { return {Kind::copy, 0.0, 0.0, field}; }
};

/// Log-normal for sizes and times, Poisson for counts.
Distribution default_distribution(std::size_t param);

/// Ground truth and sampling setup for a synthetic corpus.
struct SyntheticConfig {
    double intercept = 0.0;
    std::vector<std::pair<FeatureSpec, double>> coefficients;
    double noise_sigma = 0.0;
    std::size_t n = 100;
    std::map<std::size_t, Distribution> distributions;  // overrides of the defaults
    std::vector<std::string> devices{"synthetic"};

    /// Throws ConfigError on unknown fields or invalid values.
    static SyntheticConfig from_json_text(std::string_view text);
    static SyntheticConfig load(const std::string& path);
    std::string to_json_text() const;

    const Distribution& distribution(std::size_t param) const;
    void validate() const;
};

/// Noise-free response: intercept plus the coefficient-weighted features.
double linear_part(const SyntheticConfig& config, const AdRenderMetrics& metrics);

/// Deterministic for a fixed seed. Features are drawn per sample in registry
/// order, copies resolved afterwards, then one Gaussian noise draw:
/// nEad = max(-1, linear_part + sigma * z).
Dataset generate_synthetic(const SyntheticConfig& config, std::uint64_t seed);

}  // namespace carbontag
