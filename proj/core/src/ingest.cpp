#include "feedtriage/ingest.hpp"

#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "feedtriage/csv.hpp"
#include "feedtriage/errors.hpp"

namespace feedtriage {

namespace {

std::optional<int> parse_rating(const std::string& cell) {
    if (cell.empty()) return std::nullopt;
    std::size_t used = 0;
    int v = 0;
    try {
        v = std::stoi(cell, &used);
    } catch (const std::logic_error&) {
        throw ValidationError("rating '" + cell + "' is not an integer");
    }
    if (used != cell.size()) throw ValidationError("rating '" + cell + "' is not an integer");
    return v;
}

FeedbackRecord record_from_fields(const std::map<std::string_view, std::string>& f) {
    FeedbackRecord r;
    r.record_id = f.at("record_id");
    r.trip_id = f.at("trip_id");
    r.donor_id = f.at("donor_id");
    r.donor_name = f.at("donor_name");
    r.recipient_id = f.at("recipient_id");
    r.recipient_name = f.at("recipient_name");
    r.created_at = parse_timestamp(f.at("created_at"));
    r.rating = parse_rating(f.at("rating"));
    r.comment = f.at("comment");
    validate(r);
    return r;
}

void parse_csv(std::istream& in, ParsedFeedback& out) {
    csv::Reader reader(in);
    const auto header = reader.next();
    if (!header) return;
    std::map<std::string_view, std::size_t> columns;
    for (std::size_t i = 0; i < header->size(); ++i) {
        for (auto name : kRequiredColumns)
            if ((*header)[i] == name) columns[name] = i;
    }
    std::string missing;
    for (auto name : kRequiredColumns)
        if (!columns.contains(name)) missing += (missing.empty() ? "" : ", ") + std::string(name);
    if (!missing.empty()) throw ValidationError("input is missing columns: " + missing);

    while (true) {
        std::optional<std::vector<std::string>> row;
        try {
            row = reader.next();
        } catch (const ValidationError& e) {
            out.rejected.push_back({reader.line(), e.what()});
            break;
        }
        if (!row) break;
        if (row->size() == 1 && row->front().empty()) continue;
        if (row->size() != header->size()) {
            out.rejected.push_back({reader.line(), "expected " + std::to_string(header->size()) + " fields, got " +
                                                       std::to_string(row->size())});
            continue;
        }
        std::map<std::string_view, std::string> fields;
        for (const auto& [name, index] : columns) fields[name] = (*row)[index];
        try {
            out.records.push_back(record_from_fields(fields));
        } catch (const Error& e) {
            out.rejected.push_back({reader.line(), e.what()});
        }
    }
}

void parse_jsonl(std::istream& in, ParsedFeedback& out) {
    std::string line;
    for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            if (!j.is_object()) throw ValidationError("line is not a JSON object");
            std::map<std::string_view, std::string> fields;
            std::string missing;
            for (auto name : kRequiredColumns) {
                const auto it = j.find(std::string(name));
                if (it == j.end()) {
                    if (name == "rating" || name == "comment") {
                        fields[name] = "";
                        continue;
                    }
                    missing += (missing.empty() ? "" : ", ") + std::string(name);
                    continue;
                }
                if (it->is_null()) fields[name] = "";
                else if (it->is_string()) fields[name] = it->get<std::string>();
                else if (it->is_number_integer()) fields[name] = std::to_string(it->get<long long>());
                else throw ValidationError("field '" + std::string(name) + "' has an unsupported type");
            }
            if (!missing.empty()) throw ValidationError("missing fields: " + missing);
            out.records.push_back(record_from_fields(fields));
        } catch (const nlohmann::json::exception& e) {
            out.rejected.push_back({line_no, std::string("invalid JSON: ") + e.what()});
        } catch (const Error& e) {
            out.rejected.push_back({line_no, e.what()});
        }
    }
}

}  // namespace

std::optional<InputFormat> format_from_path(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".csv") return InputFormat::Csv;
    if (ext == ".jsonl" || ext == ".ndjson") return InputFormat::JsonLines;
    return std::nullopt;
}

ParsedFeedback parse_feedback(std::istream& in, InputFormat format) {
    ParsedFeedback out;
    if (format == InputFormat::Csv) parse_csv(in, out);
    else parse_jsonl(in, out);
    return out;
}

IngestResult ingest(Store& store, std::istream& in, InputFormat format, Timestamp now) {
    auto parsed = parse_feedback(in, format);
    IngestResult result;
    result.read = parsed.records.size() + parsed.rejected.size();
    result.ingested = store.insert_records(parsed.records, now);
    result.duplicates = parsed.records.size() - result.ingested;
    result.rejected = std::move(parsed.rejected);
    return result;
}

IngestResult ingest_file(Store& store, const std::filesystem::path& path, std::optional<InputFormat> format,
                         Timestamp now) {
    if (!format) format = format_from_path(path);
    if (!format) throw ValidationError("cannot tell the format of " + path.string() + "; use .csv or .jsonl");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read " + path.string());
    return ingest(store, in, *format, now);
}

std::size_t ingest_directions(Store& store, std::istream& in) {
    csv::Reader reader(in);
    const auto header = reader.next();
    if (!header) return 0;
    std::optional<std::size_t> id_col, role_col, dir_col;
    for (std::size_t i = 0; i < header->size(); ++i) {
        if ((*header)[i] == "entity_id") id_col = i;
        else if ((*header)[i] == "role") role_col = i;
        else if ((*header)[i] == "direction") dir_col = i;
    }
    if (!id_col || !role_col || !dir_col) throw ValidationError("directions file needs entity_id, role, direction columns");
    std::size_t stored = 0;
    while (auto row = reader.next()) {
        if (row->size() == 1 && row->front().empty()) continue;
        if (row->size() != header->size())
            throw ValidationError("directions line " + std::to_string(reader.line()) + ": wrong field count");
        const auto role = parse_role((*row)[*role_col]);
        if (!role) throw ValidationError("directions line " + std::to_string(reader.line()) + ": unknown role");
        store.upsert_direction((*row)[*id_col], *role, (*row)[*dir_col]);
        ++stored;
    }
    return stored;
}

}  // namespace feedtriage
