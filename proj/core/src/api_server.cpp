#include "feedtriage/api_server.hpp"

#include <sstream>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "feedtriage/errors.hpp"

namespace feedtriage {

using json = nlohmann::json;

namespace {

std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> parts;
    std::stringstream ss(path);
    std::string part;
    while (std::getline(ss, part, '/'))
        if (!part.empty()) parts.push_back(part);
    return parts;
}

std::optional<std::string> param(const ApiRequest& r, const std::string& key) {
    const auto it = r.params.find(key);
    if (it == r.params.end() || it->second.empty()) return std::nullopt;
    return it->second;
}

std::size_t size_param(const ApiRequest& r, const std::string& key, std::size_t fallback) {
    const auto v = param(r, key);
    if (!v) return fallback;
    try {
        std::size_t used = 0;
        const auto n = std::stoll(*v, &used);
        if (used != v->size() || n < 0) throw std::invalid_argument(*v);
        return static_cast<std::size_t>(n);
    } catch (const std::logic_error&) {
        throw ValidationError("'" + key + "' must be a non-negative integer");
    }
}

EntityRole role_param(const ApiRequest& r) {
    const auto v = param(r, "role");
    if (!v) return EntityRole::Donor;
    const auto role = parse_role(*v);
    if (!role) throw ValidationError("role must be donor or recipient");
    return *role;
}

json parse_body(const ApiRequest& r) {
    const auto body = json::parse(r.body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) throw ValidationError("request body must be a JSON object");
    return body;
}

std::string string_field(const json& body, const std::string& key, bool required) {
    const auto it = body.find(key);
    if (it == body.end() || it->is_null()) {
        if (required) throw ValidationError("missing field '" + key + "'");
        return {};
    }
    if (!it->is_string()) throw ValidationError("field '" + key + "' must be a string");
    return it->get<std::string>();
}

ApiResponse error(int status, const std::string& code, const std::string& message) {
    return {status, {{"code", code}, {"message", message}}};
}

FeedbackQuery feedback_query(const ApiRequest& r) {
    FeedbackQuery q;
    if (auto v = param(r, "from")) q.from = parse_timestamp(*v);
    if (auto v = param(r, "to")) q.to = parse_timestamp(*v);
    if (auto v = param(r, "categories")) {
        std::stringstream ss(*v);
        std::string name;
        while (std::getline(ss, name, ',')) {
            if (name.empty()) continue;
            const auto c = parse_category(name);
            if (!c) throw ValidationError("unknown category '" + name + "'");
            q.categories.push_back(*c);
        }
    }
    if (auto v = param(r, "any_issue")) {
        if (*v == "true") q.any_issue = true;
        else if (*v == "false") q.any_issue = false;
        else throw ValidationError("any_issue must be true or false");
    }
    if (auto v = param(r, "status")) {
        const auto s = parse_status(*v);
        if (!s) throw ValidationError("unknown status '" + *v + "'");
        q.status = *s;
    }
    q.donor_id = param(r, "donor_id");
    q.recipient_id = param(r, "recipient_id");
    q.limit = size_param(r, "limit", q.limit);
    if (q.limit == 0 || q.limit > 1000) throw ValidationError("limit must lie in [1, 1000]");
    q.cursor = param(r, "cursor");
    return q;
}

}  // namespace

struct ApiServer::Http {
    httplib::Server server;
};

ApiServer::ApiServer(Store& store, Pipeline& pipeline, ApiOptions options)
    : store_(store), pipeline_(pipeline), options_(std::move(options)), http_(std::make_unique<Http>()) {
    auto forward = [this](const httplib::Request& req, httplib::Response& res) {
        ApiRequest r{req.method, req.path, {}, req.get_header_value("Authorization"), req.body};
        for (const auto& [k, v] : req.params) r.params[k] = v;
        const auto out = handle(r);
        res.status = out.status;
        res.set_content(out.body.dump(), "application/json");
    };
    http_->server.Get(".*", forward);
    http_->server.Post(".*", forward);
}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind(const std::string& host, int port) {
    if (port == 0) {
        const int bound = http_->server.bind_to_any_port(host);
        if (bound < 0) throw ConfigError("cannot bind " + host);
        return bound;
    }
    if (!http_->server.bind_to_port(host, port)) throw ConfigError("cannot bind " + host + ":" + std::to_string(port));
    return port;
}

void ApiServer::serve() { http_->server.listen_after_bind(); }

void ApiServer::stop() {
    if (http_) http_->server.stop();
}

ApiResponse ApiServer::handle(const ApiRequest& request) {
    try {
        return dispatch(request);
    } catch (const ValidationError& e) {
        return error(400, e.code(), e.what());
    } catch (const ParseError& e) {
        return error(400, e.code(), e.what());
    } catch (const NotFound& e) {
        return error(404, e.code(), e.what());
    } catch (const Conflict& e) {
        return error(409, e.code(), e.what());
    } catch (const DegenerateInput& e) {
        return error(422, e.code(), e.what());
    } catch (const ConfigError& e) {
        return error(503, e.code(), e.what());
    } catch (const Error& e) {
        spdlog::error("api {} {}: {}", request.method, request.path, e.what());
        return error(500, e.code(), e.what());
    } catch (const std::exception& e) {
        spdlog::error("api {} {}: {}", request.method, request.path, e.what());
        return error(500, "internal", e.what());
    }
}

ApiResponse ApiServer::dispatch(const ApiRequest& r) {
    const auto parts = split_path(r.path);
    const bool get = r.method == "GET";
    const bool post = r.method == "POST";

    if (get && parts == std::vector<std::string>{"health"}) return {200, {{"status", "ok"}}};

    if (!options_.api_token.empty() && r.authorization != "Bearer " + options_.api_token)
        return error(401, "unauthorized", "missing or wrong bearer token");

    if (parts.empty()) return error(404, "not_found", "no such endpoint");
    const auto& head = parts[0];

    if (head == "feedback") {
        if (get && parts.size() == 1) {
            const auto page = store_.query(feedback_query(r));
            return {200, {{"rows", page.rows}, {"next_cursor", page.next_cursor ? json(*page.next_cursor) : json(nullptr)}}};
        }
        if (get && parts.size() == 2) {
            auto row = store_.get(parts[1]);
            if (!row) throw NotFound("no feedback record '" + parts[1] + "'");
            return {200, *row};
        }
        if (post && parts.size() == 3 && parts[2] == "note") {
            const auto body = parse_body(r);
            store_.set_note(parts[1], string_field(body, "note", true), string_field(body, "author", false),
                            options_.clock());
            return {200, *store_.get(parts[1])};
        }
        if (post && parts.size() == 3 && parts[2] == "status") {
            const auto body = parse_body(r);
            const auto name = string_field(body, "intervention_status", true);
            const auto status = parse_status(name);
            if (!status) throw ValidationError("unknown status '" + name + "'");
            store_.set_status(parts[1], *status, options_.clock());
            return {200, *store_.get(parts[1])};
        }
    }

    if (head == "rankings" && get && parts.size() == 1) {
        const auto role = role_param(r);
        const auto min_trips = size_param(r, "min_trips", pipeline_.options().min_trips);
        std::optional<Timestamp> before;
        if (auto month = param(r, "month")) before = month_window(*month).second;
        const auto obs = store_.observations(before);
        std::vector<TripObservation> mine;
        for (const auto& o : obs)
            if (o.role == role) mine.push_back(o);
        const auto ranked = rank_entities(score_entities(mine), min_trips);
        return {200, {{"role", role_name(role)}, {"min_trips", min_trips}, {"entities", ranked}}};
    }

    if (head == "rewrites") {
        if (get && parts.size() == 1) {
            std::optional<ReviewStatus> status;
            if (auto v = param(r, "status")) {
                status = parse_review(*v);
                if (!status) throw ValidationError("status must be Pending, Accepted or Rejected");
            }
            std::optional<std::string> month = param(r, "month");
            if (month) (void)month_window(*month);
            return {200, {{"rewrites", store_.rewrites(status, month)}}};
        }
        if (post && parts.size() == 3 && parts[2] == "decision") {
            const auto body = parse_body(r);
            const auto name = string_field(body, "decision", true);
            const auto decision = parse_review(name);
            if (!decision || *decision == ReviewStatus::Pending)
                throw ValidationError("decision must be Accepted or Rejected");
            return {200, store_.decide_rewrite(parts[1], *decision, options_.clock())};
        }
    }

    if (head == "admin") {
        if (post && parts.size() == 2 && parts[1] == "batch") return {200, pipeline_.run_daily_batch(options_.clock())};
        if (get && parts.size() == 2 && parts[1] == "batches") return {200, {{"runs", store_.batch_runs()}}};
    }

    if (head == "analytics" && get && parts.size() == 2) {
        const auto role = role_param(r);
        const auto min_trips = size_param(r, "min_trips", pipeline_.options().min_trips);
        const auto obs = store_.observations();
        if (parts[1] == "distribution") {
            double width = pipeline_.options().bucket_width;
            if (auto v = param(r, "bucket_width")) {
                try {
                    width = std::stod(*v);
                } catch (const std::logic_error&) {
                    throw ValidationError("bucket_width must be a number");
                }
            }
            return {200, distribution_json(obs, role, min_trips, width)};
        }
        if (parts[1] == "correlation") return {200, correlation_json(obs, role, min_trips)};
        if (parts[1] == "concentration") {
            std::optional<Category> category;
            if (auto v = param(r, "category")) {
                category = parse_category(*v);
                if (!category) throw ValidationError("unknown category '" + *v + "'");
            }
            return {200, concentration_json(obs, role, category, size_param(r, "k", pipeline_.options().concentration_k))};
        }
    }

    return error(404, "not_found", "no such endpoint: " + r.method + " " + r.path);
}

}  // namespace feedtriage
