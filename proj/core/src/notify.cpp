#include "feedtriage/notify.hpp"

#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "feedtriage/errors.hpp"
#include "url.hpp"

namespace feedtriage {

std::string truncate_utf8(std::string_view text, std::size_t max_chars) {
    std::size_t chars = 0;
    std::size_t i = 0;
    while (i < text.size() && chars < max_chars) {
        const auto lead = static_cast<unsigned char>(text[i]);
        std::size_t len = 1;
        if (lead >= 0xF0) len = 4;
        else if (lead >= 0xE0) len = 3;
        else if (lead >= 0xC0) len = 2;
        i = std::min(text.size(), i + len);
        ++chars;
    }
    return std::string(text.substr(0, i));
}

NotificationSummary summarize(std::span<const StoreRow> rows, std::string date) {
    NotificationSummary s;
    s.date = std::move(date);
    for (const auto& row : rows) {
        if (!row.vector || !row.vector->complete()) continue;
        FlaggedRecord flagged{row.record.record_id, row.record.donor_name, row.record.recipient_name, {},
                              truncate_utf8(row.record.comment, kCommentPreviewChars)};
        for (auto c : kAllCategories) {
            if (!row.vector->is_set(c)) continue;
            ++s.counts[index_of(c)];
            flagged.categories.emplace_back(category_name(c));
        }
        if (!flagged.categories.empty()) {
            ++s.any_issue;
            s.flagged.push_back(std::move(flagged));
        }
    }
    return s;
}

nlohmann::json webhook_payload(const NotificationSummary& summary) {
    nlohmann::json counts = nlohmann::json::object();
    for (auto c : kAllCategories) counts[std::string(category_name(c))] = summary.counts[index_of(c)];
    counts["AnyIssue"] = summary.any_issue;
    nlohmann::json flagged = nlohmann::json::array();
    for (const auto& f : summary.flagged) {
        flagged.push_back({{"record_id", f.record_id},
                           {"donor", f.donor},
                           {"recipient", f.recipient},
                           {"categories", f.categories},
                           {"comment", f.comment}});
    }
    return {{"v", kWebhookPayloadVersion}, {"date", summary.date}, {"counts", std::move(counts)}, {"flagged", std::move(flagged)}};
}

DeliveryResult notify(const std::string& url, const NotificationSummary& summary, const RetryPolicy& retry,
                      std::chrono::seconds timeout) {
    DeliveryResult result;
    if (url.empty()) {
        result.skipped = true;
        return result;
    }
    detail::SplitUrl target;
    try {
        target = detail::split_url(url);
    } catch (const Error& e) {
        result.error = e.what();
        return result;
    }
    const auto body = webhook_payload(summary).dump();
    for (int attempt = 0; attempt <= retry.retries; ++attempt) {
        if (attempt > 0 && retry.base_delay.count() > 0) std::this_thread::sleep_for(retry.delay(attempt - 1));
        ++result.attempts;
        httplib::Client client(target.origin);
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        auto res = client.Post(target.path, body, "application/json");
        if (!res) {
            result.error = "transport: " + httplib::to_string(res.error());
            continue;
        }
        result.last_status = res->status;
        if (res->status >= 200 && res->status < 300) {
            result.delivered = true;
            result.error.clear();
            return result;
        }
        result.error = "HTTP " + std::to_string(res->status);
    }
    spdlog::warn("webhook delivery to {} failed after {} attempts: {}", url, result.attempts, result.error);
    return result;
}

}  // namespace feedtriage
