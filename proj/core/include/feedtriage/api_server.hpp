#pragma once

#include <map>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "feedtriage/classifier.hpp"
#include "feedtriage/pipeline.hpp"
#include "feedtriage/store.hpp"

namespace feedtriage {

struct ApiRequest {
    std::string method;  // GET / POST
    std::string path;
    std::map<std::string, std::string> params;  // query string
    std::string authorization;                  // raw Authorization header
    std::string body;
};

struct ApiResponse {
    int status = 200;
    nlohmann::json body;
};

struct ApiOptions {
    std::string api_token;  // empty: no authentication
    Clock clock = system_now;
};

/// JSON API over the store and pipeline.
///
///   GET  /health
///   GET  /feedback            from, to, categories (comma list, all must hold), any_issue,
///                             status, donor_id, recipient_id, limit, cursor
///   GET  /feedback/{id}
///   POST /feedback/{id}/note      {"note": "...", "author": "..."}
///   POST /feedback/{id}/status    {"intervention_status": "NeedsAction"}
///   GET  /rankings            role, min_trips, month
///   GET  /rewrites            status, month
///   POST /rewrites/{id}/decision  {"decision": "Accepted" | "Rejected"}
///   POST /admin/batch         runs the daily batch now
///   GET  /admin/batches
///   GET  /analytics/distribution   role, min_trips, bucket_width
///   GET  /analytics/correlation    role, min_trips
///   GET  /analytics/concentration  role, category, k
///
/// Errors are {"code": "...", "message": "..."} with 400, 401, 404, 409,
/// 422 or 503 as appropriate.
class ApiServer {
public:
    ApiServer(Store& store, Pipeline& pipeline, ApiOptions options = {});
    ~ApiServer();
    ApiServer(const ApiServer&) = delete;
    ApiServer& operator=(const ApiServer&) = delete;

    /// Transport-free entry point; the HTTP listener forwards here.
    [[nodiscard]] ApiResponse handle(const ApiRequest& request);

    /// Binds `host:port` (port 0 picks a free one) and returns the bound port.
    int bind(const std::string& host, int port);
    /// Serves on the bound socket until stop(). Blocks.
    void serve();
    void stop();

private:
    ApiResponse dispatch(const ApiRequest& request);

    Store& store_;
    Pipeline& pipeline_;
    ApiOptions options_;
    struct Http;
    std::unique_ptr<Http> http_;
};

}  // namespace feedtriage
