#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "feedtriage/domain.hpp"
#include "feedtriage/prompts.hpp"

namespace feedtriage {

struct ChatMessage {
    enum class Role { System, User };
    Role role = Role::User;
    std::string content;
};

struct BackendRequest {
    std::string model_name;
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
};

struct TokenCounts {
    int prompt = 0;
    int completion = 0;
};

struct BackendResponse {
    std::string raw_text;
    std::chrono::milliseconds latency{0};
    std::optional<TokenCounts> token_counts;
};

/// Task tag used by the rewriter in place of a category.
inline constexpr std::string_view kRewriteTask = "direction_rewrite";

/// What a call is for. Remote backends ignore it; replay backends key on it.
struct CallContext {
    std::string record_id;
    std::string task;  // category field name or kRewriteTask
    PromptVariant variant = PromptVariant::Full;
};

/// A chat-completion provider. Implementations must be safe to call from
/// several threads at once. Transport failures throw TransportError.
class ChatBackend {
public:
    virtual ~ChatBackend() = default;

    virtual BackendResponse complete(const BackendRequest& request, const CallContext& context) = 0;

    /// Implementation tag, e.g. "http" or "replay".
    [[nodiscard]] virtual std::string implementation() const = 0;
    [[nodiscard]] virtual std::string model_name() const = 0;
};

/// `implementation/model/variant`; unique per (implementation, model, variant).
std::string backend_id(const ChatBackend& backend, PromptVariant variant);

struct HttpBackendConfig {
    std::string url;  // full endpoint URL, e.g. https://api.openai.com/v1/chat/completions
    std::string model;
    std::string bearer_token;
    double temperature = 0.0;
    std::chrono::seconds timeout{60};
};

/// OpenAI-compatible chat completions over HTTP(S).
class HttpChatBackend final : public ChatBackend {
public:
    explicit HttpChatBackend(HttpBackendConfig config);

    BackendResponse complete(const BackendRequest& request, const CallContext& context) override;
    [[nodiscard]] std::string implementation() const override { return "http"; }
    [[nodiscard]] std::string model_name() const override { return config_.model; }
    [[nodiscard]] double temperature() const noexcept { return config_.temperature; }

private:
    HttpBackendConfig config_;
};

/// Request body sent by HttpChatBackend: {model, messages:[{role, content}], temperature}.
std::string chat_request_body(const BackendRequest& request);
/// Extracts the first choice's message content from a chat-completion reply.
BackendResponse parse_chat_reply(const std::string& body);

/// Pre-recorded replies keyed by (record_id, task) and optionally by variant.
/// A variant-specific entry wins over a variant-agnostic one.
///
/// Table file format (JSON):
///   {"name": "...", "model": "...",
///    "entries": [{"record_id": "r1", "task": "inadequate_food",
///                 "variant": "NoFewShot",   // optional
///                 "response": "<raw text>"}]}
class ReplayBackend final : public ChatBackend {
public:
    explicit ReplayBackend(std::string name = "replay");

    static ReplayBackend load(const std::filesystem::path& path);

    void add(std::string record_id, std::string task, std::string response,
             std::optional<PromptVariant> variant = std::nullopt);

    BackendResponse complete(const BackendRequest& request, const CallContext& context) override;
    [[nodiscard]] std::string implementation() const override { return "replay"; }
    [[nodiscard]] std::string model_name() const override { return name_; }
    [[nodiscard]] std::size_t size() const noexcept { return table_.size(); }

private:
    using Key = std::tuple<std::string, std::string, int>;  // variant index, -1 = any
    std::string name_;
    std::map<Key, std::string> table_;
};

}  // namespace feedtriage
