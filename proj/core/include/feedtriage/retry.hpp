#pragma once

#include <chrono>
#include <thread>
#include <utility>

namespace feedtriage {

/// Exponential backoff: the k-th retry (0-based) waits `base_delay * 2^k`.
struct RetryPolicy {
    int retries = 2;
    std::chrono::milliseconds base_delay{500};

    [[nodiscard]] std::chrono::milliseconds delay(int retry_index) const noexcept {
        return base_delay * (1LL << retry_index);
    }
};

/// Calls `fn` until it returns without throwing `E`, up to `1 + retries`
/// times. The last `E` propagates. Other exceptions propagate immediately.
template <typename E, typename Fn>
auto retry_on(const RetryPolicy& policy, Fn&& fn) -> decltype(fn()) {
    for (int attempt = 0;; ++attempt) {
        try {
            return fn();
        } catch (const E&) {
            if (attempt >= policy.retries) throw;
            if (policy.base_delay.count() > 0) std::this_thread::sleep_for(policy.delay(attempt));
        }
    }
}

}  // namespace feedtriage
