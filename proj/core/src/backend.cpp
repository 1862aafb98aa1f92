#include "feedtriage/backend.hpp"

#include <fstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "feedtriage/errors.hpp"
#include "url.hpp"

namespace feedtriage {

using nlohmann::json;

std::string backend_id(const ChatBackend& backend, PromptVariant variant) {
    return backend.implementation() + "/" + backend.model_name() + "/" + std::string(variant_name(variant));
}

std::string chat_request_body(const BackendRequest& request) {
    json messages = json::array();
    for (const auto& m : request.messages) {
        messages.push_back({{"role", m.role == ChatMessage::Role::System ? "system" : "user"}, {"content", m.content}});
    }
    return json{{"model", request.model_name}, {"messages", std::move(messages)}, {"temperature", request.temperature}}
        .dump();
}

BackendResponse parse_chat_reply(const std::string& body) {
    json reply;
    try {
        reply = json::parse(body);
    } catch (const json::parse_error& e) {
        throw TransportError(std::string("backend reply is not JSON: ") + e.what());
    }
    const auto choices = reply.find("choices");
    if (choices == reply.end() || !choices->is_array() || choices->empty())
        throw TransportError("backend reply has no choices");
    const auto& message = (*choices)[0].value("message", json::object());
    const auto content = message.find("content");
    if (content == message.end() || !content->is_string()) throw TransportError("backend reply has no message content");

    BackendResponse out;
    out.raw_text = content->get<std::string>();
    if (auto usage = reply.find("usage"); usage != reply.end() && usage->is_object()) {
        out.token_counts = TokenCounts{usage->value("prompt_tokens", 0), usage->value("completion_tokens", 0)};
    }
    return out;
}

HttpChatBackend::HttpChatBackend(HttpBackendConfig config) : config_(std::move(config)) {
    if (config_.url.empty()) throw ConfigError("http backend needs a URL");
    if (config_.model.empty()) throw ConfigError("http backend needs a model name");
    (void)detail::split_url(config_.url);
}

BackendResponse HttpChatBackend::complete(const BackendRequest& request, const CallContext&) {
    const auto target = detail::split_url(config_.url);
    httplib::Client client(target.origin);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);

    httplib::Headers headers;
    if (!config_.bearer_token.empty()) headers.emplace("Authorization", "Bearer " + config_.bearer_token);

    BackendRequest effective = request;
    if (effective.model_name.empty()) effective.model_name = config_.model;

    const auto started = std::chrono::steady_clock::now();
    auto result = client.Post(target.path, headers, chat_request_body(effective), "application/json");
    if (!result) throw TransportError("POST " + config_.url + " failed: " + httplib::to_string(result.error()));
    if (result->status < 200 || result->status >= 300)
        throw TransportError("POST " + config_.url + " returned HTTP " + std::to_string(result->status));

    auto out = parse_chat_reply(result->body);
    out.latency =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);
    return out;
}

ReplayBackend::ReplayBackend(std::string name) : name_(std::move(name)) {}

ReplayBackend ReplayBackend::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read replay table " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("malformed replay table " + path.string() + ": " + e.what());
    }
    ReplayBackend backend(doc.value("name", path.stem().string()));
    for (const auto& e : doc.at("entries")) {
        std::optional<PromptVariant> variant;
        if (auto it = e.find("variant"); it != e.end() && !it->is_null()) {
            variant = parse_variant(it->get<std::string>());
            if (!variant) throw ConfigError("unknown variant in replay table: " + it->dump());
        }
        backend.add(e.at("record_id").get<std::string>(), e.at("task").get<std::string>(),
                    e.at("response").get<std::string>(), variant);
    }
    return backend;
}

void ReplayBackend::add(std::string record_id, std::string task, std::string response,
                        std::optional<PromptVariant> variant) {
    const int v = variant ? static_cast<int>(*variant) : -1;
    table_[Key{std::move(record_id), std::move(task), v}] = std::move(response);
}

BackendResponse ReplayBackend::complete(const BackendRequest&, const CallContext& context) {
    auto it = table_.find(Key{context.record_id, context.task, static_cast<int>(context.variant)});
    if (it == table_.end()) it = table_.find(Key{context.record_id, context.task, -1});
    if (it == table_.end())
        throw TransportError("replay table '" + name_ + "' has no entry for (" + context.record_id + ", " +
                             context.task + ")");
    return BackendResponse{it->second, std::chrono::milliseconds{0}, std::nullopt};
}

}  // namespace feedtriage
