#pragma once

#include <memory>
#include <string>
#include <thread>

#include "carbontag/service.hpp"

namespace carbontag {

/// HTTP front end for EstimationService.
///
///   POST /v1/estimate   EstimateRequest JSON -> EstimateResponse JSON
///   GET  /v1/stats      grade histogram
///   GET  /v1/model      model_version and feature names
///   POST /v1/model      artifact upload (hot swap)
class HttpServer {
public:
    explicit HttpServer(EstimationService& service, std::size_t worker_threads = 0);
    ~HttpServer();

    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds; port 0 picks a free port. Returns the bound port or -1.
    int bind(const std::string& host, int port);
    /// Serves on the calling thread until stop().
    void run();
    /// Serves on a background thread.
    void start();
    void stop();
    int port() const { return port_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::thread thread_;
    int port_ = -1;
};

}  // namespace carbontag
