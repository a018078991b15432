#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <pthread.h>
#include <sstream>

#include "carbontag/artifact.hpp"
#include "carbontag/checksum.hpp"
#include "carbontag/dataset.hpp"
#include "carbontag/energy_metrics.hpp"
#include "carbontag/error.hpp"
#include "carbontag/feature_select.hpp"
#include "carbontag/http_server.hpp"
#include "carbontag/regression.hpp"
#include "carbontag/service.hpp"
#include "carbontag/synthetic.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;
using namespace carbontag;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitInternal = 5;

int exit_code_for(Errc code) {
    switch (code) {
        case Errc::undefined_correlation:
        case Errc::singularity:
        case Errc::insufficient_data:
        case Errc::empty_selection:
        case Errc::size_budget:
            return kExitNumeric;
        case Errc::unavailable:
        case Errc::timeout:
            return kExitInternal;
        default:
            return kExitData;
    }
}

std::string fmt_g(double v, int digits = 17) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

/// Written next to the primary output as <output>.manifest.json.
void write_manifest(const std::string& primary_output, const std::string& command, Json configs,
                    std::optional<std::uint64_t> seed, std::vector<std::string> outputs, Json extra = Json::object()) {
    Json m{{"command", command},
           {"tool_version", CARBONTAG_VERSION},
           {"configs", std::move(configs)},
           {"seed", seed ? Json(*seed) : Json(nullptr)},
           {"outputs", std::move(outputs)}};
    for (auto& [k, v] : extra.items()) m[k] = v;
    write_file(primary_output + ".manifest.json", m.dump(2) + "\n");
}

// ---------------------------------------------------------------- ingest

struct IngestOpts {
    std::string input, out;
    bool json = false;
};

int run_ingest(const IngestOpts& o) {
    auto rows = read_measurement_csv(o.input);
    if (rows.empty()) throw SchemaError("measurement file has no data rows: " + o.input);
    auto ds = aggregate_samples(rows);
    write_dataset_csv(o.out, ds);
    write_manifest(o.out, "ingest", Json{{"input", o.input}}, std::nullopt, {o.out},
                   Json{{"dataset_id", ds.fingerprint()}});
    if (o.json) {
        std::cout << Json{{"rows", rows.size()}, {"samples", ds.size()}, {"devices", ds.devices()},
                          {"dataset_id", ds.fingerprint()}, {"output", o.out}}
                         .dump()
                  << "\n";
    } else {
        std::cout << "aggregated " << rows.size() << " rows into " << ds.size() << " samples across "
                  << ds.devices().size() << " devices -> " << o.out << "\n";
    }
    return kExitOk;
}

// ---------------------------------------------------------------- synth

struct SynthOpts {
    std::string config, out;
    std::uint64_t seed = 0;
    std::optional<std::size_t> n;
    std::optional<double> sigma;
    bool json = false;
};

int run_synth(const SynthOpts& o) {
    auto cfg = SyntheticConfig::load(o.config);
    if (o.n) cfg.n = *o.n;
    if (o.sigma) cfg.noise_sigma = *o.sigma;
    auto ds = generate_synthetic(cfg, o.seed);
    write_dataset_csv(o.out, ds);
    write_manifest(o.out, "synth", Json{{"config", o.config}}, o.seed, {o.out},
                   Json{{"n", cfg.n}, {"noise_sigma", cfg.noise_sigma}, {"dataset_id", ds.fingerprint()}});
    if (o.json)
        std::cout << Json{{"samples", ds.size()}, {"seed", o.seed}, {"dataset_id", ds.fingerprint()}, {"output", o.out}}
                         .dump()
                  << "\n";
    else
        std::cout << "generated " << ds.size() << " samples (seed " << o.seed << ") -> " << o.out << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- train

struct TrainOpts {
    std::string dataset, selection, out, model_version;
    std::vector<std::string> features;
    bool json = false;
};

int run_train(const TrainOpts& o) {
    auto ds = load_dataset(o.dataset);
    std::vector<FeatureSpec> features;
    std::vector<std::string> outputs{o.out};
    Json configs{{"dataset", o.dataset}};

    if (!o.features.empty()) {
        for (const auto& f : o.features) features.push_back(FeatureSpec::parse(f));
        std::sort(features.begin(), features.end());
    } else {
        SelectionConfig sel = o.selection.empty() ? SelectionConfig{} : SelectionConfig::load(o.selection);
        if (!o.selection.empty()) configs["selection"] = o.selection;
        SelectionReport report;
        try {
            report = select_features(ds, sel);
        } catch (const EmptySelectionError& e) {
            write_file(o.out + ".selection.json", e.report().to_json_text() + "\n");
            throw;
        }
        write_file(o.out + ".selection.json", report.to_json_text() + "\n");
        outputs.push_back(o.out + ".selection.json");
        features = report.selected;
    }

    std::string version = o.model_version;
    if (version.empty()) {
        std::string key = ds.fingerprint();
        for (const auto& f : features) key += "|" + f.name();
        version = "m-" + fnv1a_128_hex(key).substr(0, 12);
    }
    auto model = fit_ols(ds, features, version);
    write_file(o.out, export_artifact(model));
    auto summary = validate(model, ds);
    write_file(o.out + ".validation.json", summary.to_json_text() + "\n");
    outputs.push_back(o.out + ".validation.json");
    write_manifest(o.out, "train", configs, ds.seed(), outputs,
                   Json{{"dataset_id", ds.fingerprint()}, {"sample_count", ds.size()}, {"model_version", version}});

    if (o.json) {
        Json feats = Json::array();
        for (std::size_t i = 0; i < features.size(); ++i)
            feats.push_back({{"name", features[i].name()}, {"coefficient", model.coefficients()[i]}});
        std::cout << Json{{"model_version", version},
                          {"intercept", model.intercept()},
                          {"features", feats},
                          {"r2", finite_or_null(summary.overall.r2)},
                          {"rmse", summary.overall.rmse},
                          {"n", summary.overall.n},
                          {"artifact", o.out}}
                         .dump()
                  << "\n";
    } else {
        std::cout << "model " << version << ": " << features.size() << " features, in-sample r2 "
                  << fmt_g(summary.overall.r2, 6) << ", rmse " << fmt_g(summary.overall.rmse, 6) << " -> " << o.out
                  << "\n";
    }
    return kExitOk;
}

// ---------------------------------------------------------------- validate

struct ValidateOpts {
    std::string model, dataset;
    bool json = false;
};

int run_validate(const ValidateOpts& o) {
    auto imported = import_artifact(read_file(o.model));
    auto ds = load_dataset(o.dataset);
    auto summary = validate(imported.model, ds);
    if (o.json) {
        std::cout << Json::parse(summary.to_json_text()).dump() << "\n";
        return kExitOk;
    }
    std::size_t width = 7;
    for (const auto& r : summary.per_device) width = std::max(width, r.device_id->size());
    auto row = [&](const std::string& name, const ValidationReport& r) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%-*s  %8zu  %8.4f  %10.4f\n", static_cast<int>(width), name.c_str(), r.n,
                      r.r2, r.rmse);
        std::cout << buf;
    };
    char head[160];
    std::snprintf(head, sizeof head, "%-*s  %8s  %8s  %10s\n", static_cast<int>(width), "device", "n", "r2", "rmse");
    std::cout << "model " << imported.model.version() << "\n" << head;
    for (const auto& r : summary.per_device) row(*r.device_id, r);
    row("overall", summary.overall);
    return kExitOk;
}

// ---------------------------------------------------------------- label

struct LabelOpts {
    std::vector<std::string> values;
    std::string batch;
    bool json = false;
};

double parse_real(const std::string& s, std::size_t position) {
    std::size_t used = 0;
    double v = 0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size()) throw ParseError("value " + std::to_string(position) + " is not a number: '" + s + "'", position);
    return v;
}

int run_label(const LabelOpts& o) {
    std::vector<std::string> inputs = o.values;
    if (!o.batch.empty()) {
        std::ifstream file;
        std::istream* in = &std::cin;
        if (o.batch != "-") {
            file.open(o.batch);
            if (!file) throw IoError("cannot open batch file: " + o.batch);
            in = &file;
        }
        for (std::string line; std::getline(*in, line);) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) inputs.push_back(line);
        }
    }
    if (inputs.empty()) throw ConfigError("no values given; pass numbers or --batch <file>");
    Json out = Json::array();
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const double v = parse_real(inputs[i], i + 1);
        auto l = assign_label(v);
        if (o.json)
            out.push_back({{"nEad", v}, {"label", std::string(1, grade_letter(l.grade))},
                           {"bin_lower", l.bin_lower}, {"bin_upper", finite_or_null(l.bin_upper)}});
        else
            std::cout << grade_letter(l.grade) << "\n";
    }
    if (o.json) std::cout << out.dump() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- export

struct ExportOpts {
    std::string model, coefficients, verify, out, model_version;
    bool json = false;
};

LinearModel model_from_coefficients(const std::string& path, const std::string& version) {
    Json j;
    try {
        j = Json::parse(read_file(path));
    } catch (const Json::exception& e) {
        throw ConfigError("coefficients file is not valid JSON: " + std::string(e.what()));
    }
    try {
        std::vector<std::pair<FeatureSpec, double>> terms;
        for (const auto& [name, value] : j.at("coefficients").items())
            terms.emplace_back(FeatureSpec::parse(name), value.get<double>());
        std::sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        std::vector<FeatureSpec> feats;
        std::vector<double> coefs;
        for (auto& [f, c] : terms) {
            feats.push_back(f);
            coefs.push_back(c);
        }
        return LinearModel(j.at("intercept").get<double>(), std::move(feats), std::move(coefs),
                           version.empty() ? j.value("model_version", std::string("unversioned")) : version);
    } catch (const Json::exception& e) {
        throw ConfigError("coefficients file needs {intercept, coefficients:{name: value}}: " + std::string(e.what()));
    }
}

int run_export(const ExportOpts& o) {
    const int sources = !o.model.empty() + !o.coefficients.empty() + !o.verify.empty();
    if (sources != 1) throw ConfigError("export needs exactly one of --model, --coefficients or --verify");

    if (!o.verify.empty()) {
        auto bytes = read_file(o.verify);
        auto a = import_artifact(bytes);
        if (o.json)
            std::cout << Json{{"valid", true}, {"model_version", a.model.version()}, {"checksum", a.checksum},
                              {"features", a.model.features().size()}, {"bytes", bytes.size()}}
                             .dump()
                      << "\n";
        else
            std::cout << "ok: " << a.model.version() << ", " << a.model.features().size() << " features, "
                      << bytes.size() << " bytes, checksum " << a.checksum << "\n";
        return kExitOk;
    }
    if (o.out.empty()) throw ConfigError("--out is required");

    std::optional<LinearModel> model;
    Json configs;
    if (!o.model.empty()) {
        auto a = import_artifact(read_file(o.model));
        model = o.model_version.empty() ? a.model : a.model.with_version(o.model_version);
        configs = {{"model", o.model}};
    } else {
        model = model_from_coefficients(o.coefficients, o.model_version);
        configs = {{"coefficients", o.coefficients}};
    }
    auto bytes = export_artifact(*model);
    write_file(o.out, bytes);
    write_manifest(o.out, "export", configs, std::nullopt, {o.out}, Json{{"model_version", model->version()}});
    auto checksum = import_artifact(bytes).checksum;
    if (o.json)
        std::cout << Json{{"model_version", model->version()}, {"checksum", checksum}, {"bytes", bytes.size()},
                          {"output", o.out}}
                         .dump()
                  << "\n";
    else
        std::cout << "wrote " << o.out << " (" << bytes.size() << " bytes, " << model->version() << ")\n";
    return kExitOk;
}

// ---------------------------------------------------------------- serve

struct ServeOpts {
    std::string listen = "127.0.0.1:8080", model, log_dir = "carbontag-log";
    std::size_t threads = 0;
    std::size_t rotate_mib = 64;
    bool sync = false;
    bool json = false;
};

int run_serve(const ServeOpts& o) {
    const auto colon = o.listen.rfind(':');
    if (colon == std::string::npos) throw ConfigError("--listen expects host:port");
    const std::string host = o.listen.substr(0, colon);
    int port = 0;
    try {
        port = std::stoi(o.listen.substr(colon + 1));
    } catch (const std::exception&) {
        throw ConfigError("invalid port in --listen: " + o.listen);
    }

    // Signals are taken synchronously on a dedicated thread so that
    // shutdown runs outside of a signal handler.
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    ServiceOptions so;
    so.log_dir = o.log_dir;
    so.rotate_bytes = o.rotate_mib << 20;
    so.sync_each_record = o.sync;
    EstimationService service(so);
    if (!o.model.empty()) service.load_model(read_file(o.model));

    HttpServer server(service, o.threads);
    const int bound = server.bind(host, port);
    if (bound < 0) throw IoError("cannot listen on " + o.listen);

    std::thread waiter([&] {
        int sig = 0;
        sigwait(&set, &sig);
        spdlog::info("signal {}: shutting down", sig);
        server.stop();
    });
    auto model = service.current_model();
    if (o.json)
        std::cout << Json{{"listening", host + ":" + std::to_string(bound)},
                          {"model_version", model ? Json(model->version()) : Json(nullptr)}}
                         .dump()
                  << std::endl;
    else
        std::cout << "listening on " << host << ":" << bound << " model "
                  << (model ? model->version() : std::string("<none>")) << std::endl;
    server.run();
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    return kExitOk;
}

// ---------------------------------------------------------------- impact

struct ImpactOpts {
    double per_ad = 0;
    std::int64_t ads_per_day = 0, users = 0;
    bool json = false;
};

int run_impact(const ImpactOpts& o) {
    auto e = global_impact(o.per_ad, o.ads_per_day, o.users);
    if (o.json) {
        std::cout << Json{{"per_user_daily", e.per_user_daily},
                          {"global_daily", e.global_daily},
                          {"global_yearly", e.global_yearly},
                          {"assumptions",
                           {{"per_ad_energy", o.per_ad}, {"ads_per_user_per_day", o.ads_per_day}, {"user_count", o.users}}}}
                         .dump()
                  << "\n";
    } else {
        std::cout << "per_user_daily  " << fmt_g(e.per_user_daily) << " kWh/day\n"
                  << "global_daily    " << fmt_g(e.global_daily) << " kWh/day\n"
                  << "global_yearly   " << fmt_g(e.global_yearly) << " kWh/year\n";
    }
    return kExitOk;
}

// ---------------------------------------------------------------- stats

struct StatsOpts {
    std::string log_dir = "carbontag-log";
    bool json = false;
};

int run_stats(const StatsOpts& o) {
    if (!fs::is_directory(o.log_dir)) throw IoError("no such log directory: " + o.log_dir);
    auto s = scan_estimate_log(o.log_dir);
    if (o.json) {
        std::cout << Json::parse(s.to_json_text()).dump() << "\n";
        return kExitOk;
    }
    for (std::size_t g = 0; g < kGradeCount; ++g)
        std::cout << grade_letter(static_cast<Grade>(g)) << "  " << s.grades.counts[g] << "\n";
    std::cout << "total  " << s.total() << "\n";
    if (s.corrupt_lines) std::cout << "corrupt lines skipped  " << s.corrupt_lines << "\n";
    return kExitOk;
}

void configure_logging() {
    auto logger = spdlog::stderr_color_mt("carbontag");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);
    if (const char* lvl = std::getenv("CARBONTAG_LOG")) spdlog::set_level(spdlog::level::from_str(lvl));
}

}  // namespace

int main(int argc, char** argv) {
    configure_logging();

    CLI::App app{"CarbonTag: ad energy estimation, labeling and serving"};
    app.set_version_flag("--version", CARBONTAG_VERSION);
    app.require_subcommand(1);

    IngestOpts ingest;
    auto* c_ingest = app.add_subcommand("ingest", "Aggregate raw measurement samples into a dataset");
    c_ingest->add_option("--input", ingest.input, "Measurement CSV")->required();
    c_ingest->add_option("--out", ingest.out, "Aggregated dataset CSV")->required();
    c_ingest->add_flag("--json", ingest.json);

    SynthOpts synth;
    auto* c_synth = app.add_subcommand("synth", "Generate a synthetic dataset from a ground-truth config");
    c_synth->add_option("--config", synth.config, "SyntheticConfig JSON")->required();
    c_synth->add_option("--seed", synth.seed, "Random seed")->required();
    c_synth->add_option("--out", synth.out, "Dataset CSV")->required();
    c_synth->add_option("--n", synth.n, "Override the sample count");
    c_synth->add_option("--sigma", synth.sigma, "Override the noise standard deviation");
    c_synth->add_flag("--json", synth.json);

    TrainOpts train;
    auto* c_train = app.add_subcommand("train", "Select features, fit OLS and write a model artifact");
    c_train->add_option("--dataset", train.dataset, "Dataset CSV")->required();
    c_train->add_option("--selection", train.selection, "SelectionConfig JSON");
    c_train->add_option("--out", train.out, "Artifact path")->required();
    c_train->add_option("--model-version", train.model_version, "Version string (default: derived from inputs)");
    c_train->add_option("--features", train.features, "Skip selection and fit these features")->delimiter(',');
    c_train->add_flag("--json", train.json);

    ValidateOpts val;
    auto* c_val = app.add_subcommand("validate", "Per-device R2 and RMSE of a model on a dataset");
    c_val->add_option("--model", val.model, "Artifact path")->required();
    c_val->add_option("--dataset", val.dataset, "Dataset CSV")->required();
    c_val->add_flag("--json", val.json);

    LabelOpts label;
    auto* c_label = app.add_subcommand("label", "Energy label for normalized ad energy values");
    c_label->add_option("values", label.values, "nEad values")->allow_extra_args();
    c_label->add_option("--batch", label.batch, "File with one value per line ('-' for stdin)");
    c_label->add_flag("--json", label.json);

    ExportOpts exp;
    auto* c_exp = app.add_subcommand("export", "Write, re-version or verify a model artifact");
    c_exp->add_option("--model", exp.model, "Existing artifact to re-export");
    c_exp->add_option("--coefficients", exp.coefficients, "JSON {intercept, coefficients:{feature: value}}");
    c_exp->add_option("--verify", exp.verify, "Artifact to check");
    c_exp->add_option("--out", exp.out, "Output artifact path");
    c_exp->add_option("--model-version", exp.model_version, "Version string to embed");
    c_exp->add_flag("--json", exp.json);

    ServeOpts serve;
    auto* c_serve = app.add_subcommand("serve", "Run the estimation HTTP service");
    c_serve->add_option("--listen", serve.listen, "host:port (port 0 picks a free port)")->capture_default_str();
    c_serve->add_option("--model", serve.model, "Artifact to load at startup");
    c_serve->add_option("--log-dir", serve.log_dir, "Estimate record directory")->capture_default_str();
    c_serve->add_option("--threads", serve.threads, "Worker threads (0: automatic)");
    c_serve->add_option("--rotate-mib", serve.rotate_mib, "Segment size before rotation")->capture_default_str();
    c_serve->add_flag("--sync", serve.sync, "fdatasync after every record");
    c_serve->add_flag("--json", serve.json);

    ImpactOpts impact;
    auto* c_impact = app.add_subcommand("impact", "Extrapolate per-ad energy to global daily and yearly totals");
    c_impact->add_option("--per-ad", impact.per_ad, "kWh per ad")->required();
    c_impact->add_option("--ads-per-day", impact.ads_per_day, "Ads per user per day")->required();
    c_impact->add_option("--users", impact.users, "Number of users")->required();
    c_impact->add_flag("--json", impact.json);

    StatsOpts stats;
    auto* c_stats = app.add_subcommand("stats", "Grade histogram of persisted estimates");
    c_stats->add_option("--log-dir", stats.log_dir, "Estimate record directory")->capture_default_str();
    c_stats->add_flag("--json", stats.json);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (c_ingest->parsed()) return run_ingest(ingest);
        if (c_synth->parsed()) return run_synth(synth);
        if (c_train->parsed()) return run_train(train);
        if (c_val->parsed()) return run_validate(val);
        if (c_label->parsed()) return run_label(label);
        if (c_exp->parsed()) return run_export(exp);
        if (c_serve->parsed()) return run_serve(serve);
        if (c_impact->parsed()) return run_impact(impact);
        if (c_stats->parsed()) return run_stats(stats);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitUsage;
}
