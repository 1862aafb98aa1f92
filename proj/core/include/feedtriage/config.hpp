#pragma once

#include <chrono>
#include <filesystem>
#include <istream>
#include <memory>
#include <string>

#include "feedtriage/backend.hpp"
#include "feedtriage/prompts.hpp"

namespace feedtriage {

enum class BackendKind { None, Http, Replay };

/// Service settings. The file form is flat `key = value` lines; `#` starts a
/// comment. Keys match the field names. Secrets never live in the file:
/// `token_env` and `api_token_env` name environment variables.
struct ServiceConfig {
    BackendKind backend = BackendKind::None;
    std::string backend_url;
    std::string model = "gpt-4o-mini";
    std::string token_env = "FEEDTRIAGE_BACKEND_TOKEN";
    std::string replay_table;
    std::string prompt_dir;  // empty: bundled prompts
    PromptVariant variant = PromptVariant::Full;
    double temperature = 0.0;
    std::size_t parallelism = 4;
    int retries = 2;
    std::chrono::milliseconds retry_backoff{500};
    std::chrono::seconds timeout{60};
    int max_attempts = 5;
    std::size_t min_trips = 100;
    double bucket_width = 0.1;
    std::string webhook_url;
    std::string store_path = "feedtriage.db";
    std::string listen_address = "127.0.0.1:8080";
    std::string api_token_env;  // empty: API is unauthenticated
};

ServiceConfig parse_config(std::istream& in);
ServiceConfig load_config(const std::filesystem::path& path);

/// Throws ConfigError on out-of-range values or a missing token variable
/// when the http backend is selected.
void validate(const ServiceConfig& config);

/// nullptr for BackendKind::None.
std::unique_ptr<ChatBackend> make_backend(const ServiceConfig& config);

PromptCatalog load_prompts(const ServiceConfig& config);

/// Splits `host:port`. Throws ConfigError.
std::pair<std::string, int> split_listen_address(const std::string& address);

}  // namespace feedtriage
