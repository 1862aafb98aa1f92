#include "feedtriage/classifier.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "feedtriage/errors.hpp"
#include "feedtriage/response_parser.hpp"

namespace feedtriage {

Timestamp system_now() { return std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now()); }

Classifier::Classifier(ChatBackend& backend, const PromptCatalog& catalog, ClassifierOptions options)
    : backend_(backend), catalog_(catalog), options_(std::move(options)) {
    if (options_.retry.retries < 0) throw ValidationError("retry count must be non-negative");
    if (!options_.clock) options_.clock = system_now;
}

std::string Classifier::backend_id() const { return feedtriage::backend_id(backend_, options_.variant); }

CategoryVector Classifier::classify(const FeedbackRecord& record) const {
    if (record.comment_blank())
        return CategoryVector::all_false(record.record_id, std::string(kEmptyCommentExplanation), options_.clock(),
                                         backend_id());

    CategoryVector vector;
    vector.record_id = record.record_id;
    vector.backend_id = backend_id();

    for (auto category : kAllCategories) {
        const auto& tmpl = catalog_.at(category);
        BackendRequest request{backend_.model_name(),
                               {{ChatMessage::Role::User, build_prompt(tmpl, options_.variant, record)}},
                               options_.temperature};
        const CallContext context{record.record_id, tmpl.response_field, options_.variant};

        std::string last_error;
        bool transport_failed = false;
        for (int attempt = 0; attempt <= options_.retry.retries; ++attempt) {
            if (attempt > 0 && options_.retry.base_delay.count() > 0)
                std::this_thread::sleep_for(options_.retry.delay(attempt - 1));
            try {
                const auto response = backend_.complete(request, context);
                const auto parsed = parse_label_response(response.raw_text, tmpl.response_field);
                vector.set(category, parsed.label, parsed.explanation);
                last_error.clear();
                break;
            } catch (const TransportError& e) {
                transport_failed = true;
                last_error = e.what();
            } catch (const ParseError& e) {
                transport_failed = false;
                last_error = std::string(e.what()) + "; raw reply: " + e.raw();
            }
        }
        if (!last_error.empty()) {
            if (transport_failed)
                throw ClassificationError("record '" + record.record_id + "', category " +
                                          std::string(category_name(category)) + ": " + last_error);
            vector.explanations[index_of(category)] = "classification failed: " + last_error;
        }
    }
    vector.classified_at = options_.clock();
    return vector;
}

std::vector<ClassifyOutcome> Classifier::classify_batch(std::span<const FeedbackRecord> records,
                                                        std::size_t parallelism) const {
    if (parallelism == 0) throw ValidationError("parallelism must be at least 1");
    std::vector<ClassifyOutcome> results(records.size());
    parallel_for(records.size(), parallelism, [&](std::size_t i) {
        auto& slot = results[i];
        slot.record_id = records[i].record_id;
        try {
            slot.vector = classify(records[i]);
        } catch (const std::exception& e) {
            slot.error = e.what();
        }
    });
    return results;
}

void parallel_for(std::size_t n, std::size_t parallelism, const std::function<void(std::size_t)>& fn) {
    if (parallelism == 0) throw ValidationError("parallelism must be at least 1");
    const auto workers = std::min(parallelism, n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (auto i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
                    try {
                        fn(i);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
}

}  // namespace feedtriage
