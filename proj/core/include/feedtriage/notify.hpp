#pragma once

#include <array>
#include <chrono>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "feedtriage/retry.hpp"
#include "feedtriage/store.hpp"

namespace feedtriage {

// Webhook payload, version 1:
//
//   {
//     "v": 1,
//     "date": "YYYY-MM-DD",
//     "counts": {"InadequateFood": n, ..., "DirectionProblem": n, "AnyIssue": n},
//     "flagged": [
//       {"record_id": "...", "donor": "...", "recipient": "...",
//        "categories": ["DirectionProblem", ...], "comment": "<first 200 characters>"}
//     ]
//   }
inline constexpr int kWebhookPayloadVersion = 1;
inline constexpr std::size_t kCommentPreviewChars = 200;

struct FlaggedRecord {
    std::string record_id;
    std::string donor;
    std::string recipient;
    std::vector<std::string> categories;
    std::string comment;
};

struct NotificationSummary {
    std::string date;
    std::array<std::size_t, kCategoryCount> counts{};
    std::size_t any_issue = 0;
    std::vector<FlaggedRecord> flagged;
};

/// Counts and flagged-record previews over classified rows; unclassified
/// rows are ignored.
NotificationSummary summarize(std::span<const StoreRow> rows, std::string date);

nlohmann::json webhook_payload(const NotificationSummary& summary);

/// First `max_chars` UTF-8 code points of `text`.
std::string truncate_utf8(std::string_view text, std::size_t max_chars);

struct DeliveryResult {
    bool delivered = false;
    bool skipped = false;  // no webhook configured
    int attempts = 0;
    int last_status = 0;
    std::string error;
};

/// POSTs the payload to `url`, retrying transport failures and non-2xx
/// replies. An empty URL is a no-op. Never throws for delivery failures.
DeliveryResult notify(const std::string& url, const NotificationSummary& summary, const RetryPolicy& retry,
                      std::chrono::seconds timeout = std::chrono::seconds{10});

}  // namespace feedtriage
