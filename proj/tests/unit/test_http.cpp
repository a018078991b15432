#include <gtest/gtest.h>

#include <fstream>
#include <thread>
#include <httplib.h>
#include <json.hpp>

#include "carbontag/http_server.hpp"
#include "fixtures.hpp"
#include "tempdir.hpp"

using namespace carbontag;
using nlohmann::json;

namespace {

const std::string kFixtures = CARBONTAG_FIXTURE_DIR;

std::vector<std::string> fixture_bodies() {
    std::ifstream in(kFixtures + "/estimate_requests.ndjson");
    std::vector<std::string> out;
    for (std::string line; std::getline(in, line);)
        if (!line.empty()) out.push_back(line);
    return out;
}

class HttpFixture : public ::testing::Test {
protected:
    void SetUp() override {
        ServiceOptions o;
        o.log_dir = dir_.path();
        service_ = std::make_unique<EstimationService>(o);
        server_ = std::make_unique<HttpServer>(*service_, 4);
        ASSERT_GT(server_->bind("127.0.0.1", 0), 0);
        server_->start();
        client_ = std::make_unique<httplib::Client>("127.0.0.1", server_->port());
    }
    void TearDown() override { server_->stop(); }

    fixtures::TempDir dir_{"ct-http"};
    std::unique_ptr<EstimationService> service_;
    std::unique_ptr<HttpServer> server_;
    std::unique_ptr<httplib::Client> client_;
};

}  // namespace

TEST_F(HttpFixture, EstimateWithoutModelIs503) {
    auto res = client_->Post("/v1/estimate", fixture_bodies()[0], "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 503);
    EXPECT_EQ(json::parse(res->body)["error"], "unavailable");
    auto model = client_->Get("/v1/model");
    ASSERT_TRUE(model);
    EXPECT_EQ(model->status, 503);
}

TEST_F(HttpFixture, UploadThenEstimate) {
    auto up = client_->Post("/v1/model", export_artifact(fixtures::table3_model("http-1")), "application/json");
    ASSERT_TRUE(up);
    ASSERT_EQ(up->status, 200);
    EXPECT_EQ(json::parse(up->body)["model_version"], "http-1");

    auto info = client_->Get("/v1/model");
    ASSERT_TRUE(info);
    auto j = json::parse(info->body);
    EXPECT_EQ(j["model_version"], "http-1");
    EXPECT_EQ(j["features"].size(), 11u);
    EXPECT_EQ(j["checksum"].get<std::string>().size(), 32u);

    auto model = service_->current_model();
    for (const auto& body : fixture_bodies()) {
        auto res = client_->Post("/v1/estimate", body, "application/json");
        ASSERT_TRUE(res);
        ASSERT_EQ(res->status, 200) << res->body;
        auto resp = EstimateResponse::from_json_text(res->body);
        auto offline = evaluate_request(EstimateRequest::from_json_text(body), *model);
        EXPECT_EQ(resp.nEad_estimate, offline.nEad_estimate);
        EXPECT_EQ(resp.label, offline.label);
        EXPECT_EQ(resp.model_version, "http-1");
        auto keys = json::parse(res->body);
        EXPECT_TRUE(keys.contains("nEad_estimate") && keys.contains("label") && keys.contains("model_version") &&
                    keys.contains("processing_time"));
    }
    auto stats = client_->Get("/v1/stats");
    ASSERT_TRUE(stats);
    auto sj = json::parse(stats->body);
    EXPECT_EQ(sj["total"], 250);
    EXPECT_EQ(sj["by_model_version"]["http-1"]["total"], 250);
}

TEST_F(HttpFixture, ValidationErrorsAre400WithField) {
    client_->Post("/v1/model", export_artifact(fixtures::table3_model()), "application/json");
    auto body = json::parse(fixture_bodies()[0]);
    body["parameters"].erase("screen_size");
    auto res = client_->Post("/v1/estimate", body.dump(), "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 400);
    auto j = json::parse(res->body);
    EXPECT_EQ(j["error"], "validation");
    EXPECT_EQ(j["field"], "screen_size");

    auto garbage = client_->Post("/v1/estimate", "{{{", "application/json");
    ASSERT_TRUE(garbage);
    EXPECT_EQ(garbage->status, 400);
    EXPECT_EQ(json::parse(garbage->body)["field"], "body");
}

TEST_F(HttpFixture, BadUploadIs422AndKeepsModel) {
    client_->Post("/v1/model", export_artifact(fixtures::table3_model("keep")), "application/json");
    auto bad = export_artifact(fixtures::table3_model("broken"));
    bad[bad.size() - 5] ^= 0x02;
    auto res = client_->Post("/v1/model", bad, "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 422);
    EXPECT_EQ(json::parse(res->body)["error"], "integrity");
    auto info = client_->Get("/v1/model");
    EXPECT_EQ(json::parse(info->body)["model_version"], "keep");
}

TEST_F(HttpFixture, StatsOnEmptyLog) {
    auto res = client_->Get("/v1/stats");
    ASSERT_TRUE(res);
    auto j = json::parse(res->body);
    EXPECT_EQ(j["total"], 0);
    for (const char* g : {"A", "B", "C", "D", "E", "F", "G"}) EXPECT_EQ(j["grades"][g], 0);
}

TEST(HttpServerLifecycle, StopBeforeRunMakesRunReturn) {
    fixtures::TempDir dir("ct-http-stop");
    ServiceOptions o;
    o.log_dir = dir.path();
    EstimationService service(o);
    HttpServer server(service, 1);
    ASSERT_GT(server.bind("127.0.0.1", 0), 0);
    server.stop();
    server.run();
}

TEST(HttpServerLifecycle, StopRacingRunNeverHangs) {
    fixtures::TempDir dir("ct-http-race");
    ServiceOptions o;
    o.log_dir = dir.path();
    EstimationService service(o);
    for (int i = 0; i < 50; ++i) {
        HttpServer server(service, 1);
        ASSERT_GT(server.bind("127.0.0.1", 0), 0);
        std::thread runner([&] { server.run(); });
        server.stop();
        runner.join();
    }
}
