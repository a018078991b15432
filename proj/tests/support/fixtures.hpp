#pragma once

// Shared test fixtures: the eleven-feature model shape used by the deployed
// estimator and a synthetic configuration with closed-form signal variance.

#include <cmath>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "carbontag/feature_spec.hpp"
#include "carbontag/regression.hpp"
#include "carbontag/synthetic.hpp"

namespace fixtures {

using carbontag::Distribution;
using carbontag::FeatureSpec;
using carbontag::SyntheticConfig;

/// The eleven regressors of the published estimator.
inline std::vector<FeatureSpec> table3_features() {
    return {
        FeatureSpec{"ad_navigation_duration", "screen_size", "request_mean"},
        FeatureSpec{"ad_navigation_duration", "ad_navigation_onLoad"},
        FeatureSpec{"response_mean", "screen_size"},
        FeatureSpec{"ad_navigation_duration", "redirectTime_mean"},
        FeatureSpec{"ad_navigation_duration"},
        FeatureSpec{"screen_size"},
        FeatureSpec{"tcp_mean"},
        FeatureSpec{"request_mean"},
        FeatureSpec{"response_mean"},
        FeatureSpec{"it_xmlhttprequest"},
        FeatureSpec{"redirectTime_mean"},
    };
}

inline std::vector<double> table3_coefficients() {
    return {3e-11, 4e-4, 5e-8, 1e-3, 3e-3, 1e-6, 0.2, 0.05, 0.1, 0.25, 0.8};
}

inline constexpr double kTable3Intercept = 1.5;

inline SyntheticConfig table3_config(double sigma, std::size_t n) {
    SyntheticConfig c;
    c.intercept = kTable3Intercept;
    auto feats = table3_features();
    auto coefs = table3_coefficients();
    for (std::size_t i = 0; i < feats.size(); ++i) c.coefficients.emplace_back(feats[i], coefs[i]);
    c.noise_sigma = sigma;
    c.n = n;
    using carbontag::param_index;
    c.distributions[param_index("screen_size")] = Distribution::lognormal(std::log(2.0e6), 0.2);
    c.distributions[param_index("request_mean")] = Distribution::lognormal(std::log(30.0), 0.3);
    c.distributions[param_index("ad_navigation_duration")] = Distribution::lognormal(std::log(600.0), 0.3);
    c.distributions[param_index("ad_navigation_onLoad")] = Distribution::lognormal(std::log(5.0), 0.3);
    c.distributions[param_index("response_mean")] = Distribution::lognormal(std::log(15.0), 0.3);
    c.distributions[param_index("redirectTime_mean")] = Distribution::lognormal(std::log(2.0), 0.3);
    c.distributions[param_index("tcp_mean")] = Distribution::lognormal(std::log(10.0), 0.3);
    c.distributions[param_index("it_xmlhttprequest")] = Distribution::poisson(5.0);
    c.devices = {"windows-desktop", "ubuntu-desktop", "ubuntu-laptop", "windows-laptop", "mac-laptop"};
    return c;
}

/// E[x^m] for m in {1, 2} of an independently drawn field.
inline long double raw_moment(const Distribution& d, int m) {
    switch (d.kind) {
        case Distribution::Kind::lognormal:
            return std::exp(static_cast<long double>(m) * d.a + 0.5L * m * m * d.b * d.b);
        case Distribution::Kind::poisson:
            return m == 1 ? d.a : static_cast<long double>(d.a) + static_cast<long double>(d.a) * d.a;
        case Distribution::Kind::uniform: {
            long double lo = d.a, hi = d.b;
            return m == 1 ? (lo + hi) / 2 : (hi * hi + hi * lo + lo * lo) / 3;
        }
        case Distribution::Kind::constant:
            return m == 1 ? d.a : static_cast<long double>(d.a) * d.a;
        case Distribution::Kind::copy:
            break;
    }
    throw std::runtime_error("raw_moment: copies are not independent");
}

/// Closed-form variance of the noise-free response for independent fields:
/// Var(sum c_k T_k) = sum_k sum_l c_k c_l (E[T_k T_l] - E[T_k] E[T_l]).
inline long double analytic_signal_variance(const SyntheticConfig& c) {
    auto expect = [&](const std::map<std::size_t, int>& powers) {
        long double e = 1;
        for (auto [p, m] : powers) e *= raw_moment(c.distribution(p), m);
        return e;
    };
    long double var = 0;
    for (const auto& [fk, ck] : c.coefficients) {
        for (const auto& [fl, cl] : c.coefficients) {
            std::map<std::size_t, int> joint, pk, pl;
            for (auto f : fk.factors()) ++joint[f], ++pk[f];
            for (auto f : fl.factors()) ++joint[f], ++pl[f];
            var += static_cast<long double>(ck) * cl * (expect(joint) - expect(pk) * expect(pl));
        }
    }
    return var;
}

inline long double analytic_r2(const SyntheticConfig& c) {
    const long double s = analytic_signal_variance(c);
    return s / (s + static_cast<long double>(c.noise_sigma) * c.noise_sigma);
}

inline carbontag::LinearModel table3_model(std::string version = "table3-fixture") {
    return carbontag::LinearModel(kTable3Intercept, table3_features(), table3_coefficients(), std::move(version));
}

/// Random metrics with every field present, on the same scales as table3_config.
inline carbontag::AdRenderMetrics random_metrics(std::mt19937_64& rng) {
    auto m = carbontag::AdRenderMetrics::zeros();
    std::lognormal_distribution<double> ln(0.0, 1.5);
    for (std::size_t p = 0; p < carbontag::kParamCount; ++p) {
        double v = ln(rng);
        if (carbontag::parameter_registry()[p].kind == carbontag::ParamKind::count) v = std::floor(v * 5);
        if (carbontag::param_name(p) == "screen_size") v *= 1.0e6;
        m.set(p, v);
    }
    return m;
}

}  // namespace fixtures
