#include "feedtriage/config.hpp"

#include <cstdlib>
#include <fstream>

#include "feedtriage/errors.hpp"

namespace feedtriage {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        T out{};
        if constexpr (std::is_floating_point_v<T>) out = static_cast<T>(std::stod(value, &used));
        else out = static_cast<T>(std::stoll(value, &used));
        if (used != value.size()) throw std::invalid_argument(value);
        return out;
    } catch (const std::logic_error&) {
        throw ConfigError("config key '" + key + "' expects a number, got '" + value + "'");
    }
}

const char* env(const std::string& name) {
    const char* v = name.empty() ? nullptr : std::getenv(name.c_str());
    return v && *v ? v : nullptr;
}

}  // namespace

ServiceConfig parse_config(std::istream& in) {
    ServiceConfig c;
    std::string line;
    for (int line_no = 1; std::getline(in, line); ++line_no) {
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));

        if (key == "backend") {
            if (value == "none") c.backend = BackendKind::None;
            else if (value == "http") c.backend = BackendKind::Http;
            else if (value == "replay") c.backend = BackendKind::Replay;
            else throw ConfigError("backend must be none, http or replay");
        } else if (key == "backend_url") c.backend_url = value;
        else if (key == "model") c.model = value;
        else if (key == "token_env") c.token_env = value;
        else if (key == "replay_table") c.replay_table = value;
        else if (key == "prompt_dir") c.prompt_dir = value;
        else if (key == "variant") {
            const auto v = parse_variant(value);
            if (!v) throw ConfigError("variant must be Full, NoGuidelines or NoFewShot");
            c.variant = *v;
        } else if (key == "temperature") c.temperature = parse_number<double>(key, value);
        else if (key == "parallelism") c.parallelism = parse_number<std::size_t>(key, value);
        else if (key == "retries") c.retries = parse_number<int>(key, value);
        else if (key == "retry_backoff_ms") c.retry_backoff = std::chrono::milliseconds{parse_number<long long>(key, value)};
        else if (key == "timeout_s") c.timeout = std::chrono::seconds{parse_number<long long>(key, value)};
        else if (key == "max_attempts") c.max_attempts = parse_number<int>(key, value);
        else if (key == "min_trips") c.min_trips = parse_number<std::size_t>(key, value);
        else if (key == "bucket_width") c.bucket_width = parse_number<double>(key, value);
        else if (key == "webhook_url") c.webhook_url = value;
        else if (key == "store_path") c.store_path = value;
        else if (key == "listen_address") c.listen_address = value;
        else if (key == "api_token_env") c.api_token_env = value;
        else throw ConfigError("unknown config key '" + key + "'");
    }
    return c;
}

ServiceConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path.string());
    auto c = parse_config(in);
    validate(c);
    return c;
}

void validate(const ServiceConfig& c) {
    if (c.parallelism == 0) throw ConfigError("parallelism must be at least 1");
    if (c.retries < 0) throw ConfigError("retries must be non-negative");
    if (c.max_attempts < 1) throw ConfigError("max_attempts must be at least 1");
    if (c.min_trips == 0) throw ConfigError("min_trips must be at least 1");
    if (!(c.bucket_width > 0.0 && c.bucket_width <= 1.0)) throw ConfigError("bucket_width must lie in (0, 1]");
    if (c.store_path.empty()) throw ConfigError("store_path is empty");
    (void)split_listen_address(c.listen_address);
    if (c.backend == BackendKind::Http) {
        if (c.backend_url.empty()) throw ConfigError("backend = http needs backend_url");
        if (!env(c.token_env))
            throw ConfigError("backend = http needs the token in environment variable '" + c.token_env + "'");
    }
    if (c.backend == BackendKind::Replay && c.replay_table.empty())
        throw ConfigError("backend = replay needs replay_table");
    if (!c.api_token_env.empty() && !env(c.api_token_env))
        throw ConfigError("api_token_env names '" + c.api_token_env + "' but it is unset");
}

std::unique_ptr<ChatBackend> make_backend(const ServiceConfig& c) {
    switch (c.backend) {
        case BackendKind::None: return nullptr;
        case BackendKind::Replay: return std::make_unique<ReplayBackend>(ReplayBackend::load(c.replay_table));
        case BackendKind::Http: {
            const char* token = env(c.token_env);
            if (!token) throw ConfigError("environment variable '" + c.token_env + "' is unset");
            return std::make_unique<HttpChatBackend>(HttpBackendConfig{c.backend_url, c.model, token, c.temperature, c.timeout});
        }
    }
    return nullptr;
}

PromptCatalog load_prompts(const ServiceConfig& c) {
    return PromptCatalog::load(c.prompt_dir.empty() ? default_prompt_dir() : std::filesystem::path(c.prompt_dir));
}

std::pair<std::string, int> split_listen_address(const std::string& address) {
    const auto colon = address.rfind(':');
    if (colon == std::string::npos || colon == 0) throw ConfigError("listen_address must be host:port");
    int port = 0;
    try {
        port = std::stoi(address.substr(colon + 1));
    } catch (const std::logic_error&) {
        throw ConfigError("listen_address has a bad port");
    }
    if (port < 0 || port > 65535) throw ConfigError("listen_address port out of range");
    return {address.substr(0, colon), port};
}

}  // namespace feedtriage
