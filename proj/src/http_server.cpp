#include "carbontag/http_server.hpp"

#include <httplib.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <mutex>

#include "carbontag/error.hpp"

namespace carbontag {

namespace {

using Json = nlohmann::json;

constexpr const char* kJson = "application/json";

int status_for(Errc code) {
    switch (code) {
        case Errc::validation:
        case Errc::feature_resolution:
            return 400;
        case Errc::integrity:
        case Errc::version:
        case Errc::size_budget:
        case Errc::config:
            return 422;
        case Errc::unavailable:
        case Errc::timeout:
            return 503;
        default:
            return 500;
    }
}

void send_error(httplib::Response& res, const Error& e, const std::string& field = {}) {
    Json body{{"error", to_string(e.code())}, {"message", e.what()}};
    if (!field.empty()) body["field"] = field;
    res.status = status_for(e.code());
    res.set_content(body.dump(), kJson);
}

}  // namespace

struct HttpServer::Impl {
    EstimationService& service;
    httplib::Server server;
    std::mutex lifecycle_mu;
    bool started = false;
    bool stop_requested = false;

    explicit Impl(EstimationService& svc, std::size_t threads) : service(svc) {
        server.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
        server.set_keep_alive_max_count(1u << 20);
        server.set_tcp_nodelay(true);

        server.Post("/v1/estimate", [this](const httplib::Request& req, httplib::Response& res) {
            try {
                auto request = EstimateRequest::from_json_text(req.body);
                auto response = service.handle_estimate(request);
                res.set_content(response.to_json_text(), kJson);
            } catch (const ValidationError& e) {
                send_error(res, e, e.field());
            } catch (const Error& e) {
                send_error(res, e);
            } catch (const std::exception& e) {
                spdlog::error("estimate failed: {}", e.what());
                res.status = 500;
                res.set_content(Json{{"error", "internal"}, {"message", e.what()}}.dump(), kJson);
            }
        });

        server.Get("/v1/stats", [this](const httplib::Request&, httplib::Response& res) {
            res.set_content(service.stats().to_json_text(), kJson);
        });

        server.Get("/v1/model", [this](const httplib::Request&, httplib::Response& res) {
            auto model = service.current_model();
            if (!model) {
                send_error(res, UnavailableError("no model loaded"));
                return;
            }
            Json names = Json::array();
            for (const auto& f : model->model().features()) names.push_back(f.name());
            res.set_content(Json{{"model_version", model->version()},
                                 {"features", names},
                                 {"checksum", model->artifact.checksum}}
                                .dump(),
                            kJson);
        });

        server.Post("/v1/model", [this](const httplib::Request& req, httplib::Response& res) {
            try {
                service.load_model(req.body);
                auto model = service.current_model();
                spdlog::info("loaded model {}", model->version());
                res.set_content(Json{{"model_version", model->version()}, {"checksum", model->artifact.checksum}}.dump(),
                                kJson);
            } catch (const Error& e) {
                spdlog::warn("rejected model upload: {}", e.what());
                send_error(res, e);
            }
        });
    }
};

HttpServer::HttpServer(EstimationService& service, std::size_t worker_threads) {
    if (worker_threads == 0) worker_threads = std::max<std::size_t>(16, 2 * std::thread::hardware_concurrency());
    impl_ = std::make_unique<Impl>(service, worker_threads);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0)
        port_ = impl_->server.bind_to_any_port(host);
    else
        port_ = impl_->server.bind_to_port(host, port) ? port : -1;
    return port_;
}

void HttpServer::run() {
    {
        std::lock_guard lk(impl_->lifecycle_mu);
        if (impl_->stop_requested) return;
        impl_->started = true;
    }
    impl_->server.listen_after_bind();
}

void HttpServer::start() {
    thread_ = std::thread([this] { run(); });
    impl_->server.wait_until_ready();
}

/// Safe from any thread and at any point, including before run() has
/// entered the accept loop.
void HttpServer::stop() {
    if (impl_) {
        bool started = false;
        {
            std::lock_guard lk(impl_->lifecycle_mu);
            impl_->stop_requested = true;
            started = impl_->started;
        }
        if (started) {
            impl_->server.wait_until_ready();
            impl_->server.stop();
        }
    }
    if (thread_.joinable()) thread_.join();
}

}  // namespace carbontag
