#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "feedtriage/domain.hpp"
#include "feedtriage/store.hpp"

namespace feedtriage {

enum class InputFormat { Csv, JsonLines };

/// Picks the format from the extension: .csv, .jsonl/.ndjson.
std::optional<InputFormat> format_from_path(const std::filesystem::path& path);

inline constexpr std::array<std::string_view, 9> kRequiredColumns = {
    "record_id", "trip_id", "donor_id", "donor_name", "recipient_id", "recipient_name", "created_at", "rating", "comment",
};

struct RejectedRow {
    std::size_t line = 0;
    std::string reason;
};

struct ParsedFeedback {
    std::vector<FeedbackRecord> records;
    std::vector<RejectedRow> rejected;
};

/// Parses exported trip feedback. A CSV header lacking required columns
/// throws ValidationError naming them; malformed rows are collected with
/// their line numbers rather than aborting the read.
ParsedFeedback parse_feedback(std::istream& in, InputFormat format);

struct IngestResult {
    std::size_t read = 0;
    std::size_t ingested = 0;
    std::size_t duplicates = 0;
    std::vector<RejectedRow> rejected;
};

IngestResult ingest(Store& store, std::istream& in, InputFormat format, Timestamp now);
IngestResult ingest_file(Store& store, const std::filesystem::path& path, std::optional<InputFormat> format,
                         Timestamp now);

/// Directions CSV: `entity_id,role,direction` with role donor|recipient.
/// Returns the number of rows stored.
std::size_t ingest_directions(Store& store, std::istream& in);

}  // namespace feedtriage
