#include <atomic>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "feedtriage/api_server.hpp"
#include "feedtriage/config.hpp"
#include "feedtriage/errors.hpp"
#include "feedtriage/evaluation.hpp"
#include "feedtriage/ingest.hpp"
#include "feedtriage/pipeline.hpp"
#include "feedtriage/tfidf.hpp"

using namespace feedtriage;
using nlohmann::json;

namespace {

struct Context {
    ServiceConfig config;
    std::unique_ptr<Store> store;
    std::unique_ptr<ChatBackend> backend;
    PromptCatalog catalog;

    PipelineOptions pipeline_options() const {
        PipelineOptions o;
        o.variant = config.variant;
        o.temperature = config.temperature;
        o.parallelism = config.parallelism;
        o.retry = {config.retries, config.retry_backoff};
        o.max_attempts = config.max_attempts;
        o.min_trips = config.min_trips;
        o.bucket_width = config.bucket_width;
        o.webhook_url = config.webhook_url;
        o.webhook_retry = {config.retries, config.retry_backoff};
        return o;
    }
};

Context open_context(const std::string& config_path, bool need_backend) {
    Context c;
    if (!config_path.empty()) {
        c.config = load_config(config_path);
    } else {
        validate(c.config);
    }
    c.store = Store::open(c.config.store_path);
    if (need_backend) {
        c.backend = make_backend(c.config);
        c.catalog = load_prompts(c.config);
    }
    return c;
}

void print(const json& j) { std::cout << j.dump(2) << "\n"; }

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ','))
        if (!part.empty()) out.push_back(part);
    return out;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << content)) throw StoreError("cannot write " + path.string());
}

std::atomic<ApiServer*> g_server{nullptr};

void on_signal(int) {
    if (auto* s = g_server.load()) s->stop();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Feedback triage: classify volunteer feedback, rank interventions, rewrite directions."};
    app.require_subcommand(1);
    std::string config_path;
    bool verbose = false;
    app.add_option("--config", config_path, "Service config file (key = value lines)");
    app.add_flag("-v,--verbose", verbose, "Log progress to stderr");

    auto* ingest_cmd = app.add_subcommand("ingest", "Load exported feedback into the store");
    std::string input_path, format_name, directions_path;
    ingest_cmd->add_option("file", input_path, "CSV or JSON-lines feedback export");
    ingest_cmd->add_option("--format", format_name, "csv or jsonl (default: from the extension)")
        ->check(CLI::IsMember({"csv", "jsonl"}));
    ingest_cmd->add_option("--directions", directions_path, "CSV of entity_id,role,direction");

    auto* classify_cmd = app.add_subcommand("classify", "Run the daily classification batch");
    std::string now_text;
    classify_cmd->add_option("--now", now_text, "Batch cut-off (RFC 3339; default: current time)");

    auto* score_cmd = app.add_subcommand("score", "Rank donors or recipients by intervention score");
    std::string role_name_arg = "donor", month_arg, out_format = "csv";
    std::optional<std::size_t> min_trips_arg;
    score_cmd->add_option("--role", role_name_arg, "donor or recipient")->check(CLI::IsMember({"donor", "recipient"}));
    score_cmd->add_option("--min-trips", min_trips_arg, "Minimum trips to be ranked (default: config)");
    score_cmd->add_option("--month", month_arg, "Only history before the end of YYYY-MM");
    score_cmd->add_option("--output", out_format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

    auto* rewrite_cmd = app.add_subcommand("rewrite", "Generate direction rewrites for a month's feedback");
    std::string rewrite_month;
    rewrite_cmd->add_option("--month", rewrite_month, "YYYY-MM")->required();

    auto* evaluate_cmd = app.add_subcommand("evaluate", "Evaluate classification against gold annotations");
    std::string gold_path, variants_arg = "Full", annotator = std::string(kConsensusAnnotator), agreement_arg,
                                   tfidf_train, rubric_path, eval_out;
    evaluate_cmd->add_option("--gold", gold_path, "Gold CSV (record_id, annotator, one column per category)");
    evaluate_cmd->add_option("--variants", variants_arg, "Comma list of Full, NoGuidelines, NoFewShot");
    evaluate_cmd->add_option("--annotator", annotator, "Gold annotator to score against");
    evaluate_cmd->add_option("--agreement", agreement_arg, "Two annotators, a,b: report Cohen's kappa");
    evaluate_cmd->add_option("--tfidf-train", tfidf_train, "Gold CSV used to train the TF-IDF baseline");
    evaluate_cmd->add_option("--rubric", rubric_path, "Rewrite rubric CSV: rewrite_id,helpfulness,novelty,clarity,annotator");
    evaluate_cmd->add_option("--out", eval_out, "Directory for per-variant CSV reports");

    auto* report_cmd = app.add_subcommand("report", "Build the monthly action bundle");
    std::string report_month, report_out = "report";
    report_cmd->add_option("--month", report_month, "YYYY-MM")->required();
    report_cmd->add_option("--out", report_out, "Output directory");

    auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP API");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << json{{"code", "usage"}, {"message", e.what()}}.dump() << "\n";
        return 2;
    }
    spdlog::set_level(verbose ? spdlog::level::info : spdlog::level::warn);

    try {
        if (*ingest_cmd) {
            auto ctx = open_context(config_path, false);
            json out = json::object();
            if (!input_path.empty()) {
                std::optional<InputFormat> format;
                if (format_name == "csv") format = InputFormat::Csv;
                if (format_name == "jsonl") format = InputFormat::JsonLines;
                const auto r = ingest_file(*ctx.store, input_path, format, system_now());
                json rejected = json::array();
                for (const auto& row : r.rejected) rejected.push_back({{"line", row.line}, {"reason", row.reason}});
                out["read"] = r.read;
                out["ingested"] = r.ingested;
                out["duplicates"] = r.duplicates;
                out["rejected"] = rejected;
            }
            if (!directions_path.empty()) {
                std::ifstream in(directions_path);
                if (!in) throw ValidationError("cannot read " + directions_path);
                out["directions"] = ingest_directions(*ctx.store, in);
            }
            if (out.empty()) throw ValidationError("nothing to ingest: give a feedback file or --directions");
            print(out);
        } else if (*classify_cmd) {
            auto ctx = open_context(config_path, true);
            Pipeline pipeline(*ctx.store, ctx.catalog, ctx.backend.get(), ctx.pipeline_options());
            const auto now = now_text.empty() ? system_now() : parse_timestamp(now_text);
            json out = pipeline.run_daily_batch(now);
            if (const auto d = pipeline.last_delivery())
                out["webhook"] = {{"delivered", d->delivered}, {"attempts", d->attempts}, {"error", d->error}};
            print(out);
        } else if (*score_cmd) {
            auto ctx = open_context(config_path, false);
            const auto role = *parse_role(role_name_arg);
            std::optional<Timestamp> before;
            if (!month_arg.empty()) before = month_window(month_arg).second;
            std::vector<TripObservation> mine;
            for (auto& o : ctx.store->observations(before))
                if (o.role == role) mine.push_back(std::move(o));
            const auto ranked = rank_entities(score_entities(mine), min_trips_arg.value_or(ctx.config.min_trips));
            if (out_format == "json") print(ranked);
            else std::cout << to_csv(ranked);
        } else if (*rewrite_cmd) {
            auto ctx = open_context(config_path, true);
            Pipeline pipeline(*ctx.store, ctx.catalog, ctx.backend.get(), ctx.pipeline_options());
            const auto [begin, end] = month_window(rewrite_month);
            std::vector<std::string> warnings;
            const auto made = pipeline.generate_rewrites(ctx.store->rows_between(begin, end), &warnings);
            print({{"month", rewrite_month},
                   {"generated", made.size()},
                   {"rewrites", ctx.store->rewrites(std::nullopt, rewrite_month)},
                   {"warnings", warnings}});
        } else if (*evaluate_cmd) {
            const bool classify = !gold_path.empty();
            auto ctx = open_context(config_path, classify);
            json out = json::object();
            if (classify) {
                const auto all_gold = read_gold_csv(std::filesystem::path(gold_path));
                const auto gold = by_annotator(all_gold, annotator);
                if (gold.empty()) throw ValidationError("no gold rows for annotator '" + annotator + "'");
                std::vector<FeedbackRecord> records;
                for (const auto& g : gold) {
                    const auto row = ctx.store->get(g.record_id);
                    if (!row) throw NotFound("gold record '" + g.record_id + "' is not in the store");
                    records.push_back(row->record);
                }
                std::vector<PromptVariant> variants;
                for (const auto& name : split_list(variants_arg)) {
                    const auto v = parse_variant(name);
                    if (!v) throw ValidationError("unknown variant '" + name + "'");
                    variants.push_back(*v);
                }
                if (!ctx.backend) throw ConfigError("evaluate needs a backend; set backend in the config");
                const auto opts = ctx.pipeline_options();
                const auto reports = run_ablation(records, gold, *ctx.backend, ctx.catalog, variants,
                                                  {opts.parallelism, opts.retry, system_now});
                json list = json::array();
                for (const auto& [variant, report] : reports) {
                    list.push_back(report);
                    if (!eval_out.empty()) {
                        std::filesystem::create_directories(eval_out);
                        write_file(std::filesystem::path(eval_out) / ("eval_" + std::string(variant_name(variant)) + ".csv"),
                                   to_csv(report));
                    }
                }
                out["reports"] = list;

                if (!tfidf_train.empty()) {
                    std::vector<LabeledComment> corpus;
                    for (const auto& g : by_annotator(read_gold_csv(std::filesystem::path(tfidf_train)), annotator)) {
                        const auto row = ctx.store->get(g.record_id);
                        if (!row) throw NotFound("training record '" + g.record_id + "' is not in the store");
                        corpus.push_back({row->record.comment,
                                          std::any_of(g.labels.begin(), g.labels.end(), [](bool b) { return b; })});
                    }
                    const auto model = TfidfModel::train(corpus);
                    std::map<std::string, bool> predictions;
                    for (const auto& r : records) predictions[r.record_id] = model.predict(r.comment);
                    out["baseline"] = evaluate_any_issue(predictions, gold, "tfidf/logistic/n-a");
                }
            }
            if (!agreement_arg.empty()) {
                const auto pair = split_list(agreement_arg);
                if (pair.size() != 2) throw ValidationError("--agreement takes two annotators, a,b");
                if (gold_path.empty()) throw ValidationError("--agreement needs --gold");
                out["agreement"] = annotator_agreement(read_gold_csv(std::filesystem::path(gold_path)), pair[0], pair[1]);
            }
            if (!rubric_path.empty()) {
                std::ifstream in(rubric_path);
                if (!in) throw ValidationError("cannot read " + rubric_path);
                std::vector<RubricScore> scores;
                std::string line;
                std::getline(in, line);  // header
                while (std::getline(in, line)) {
                    const auto cells = split_list(line);
                    if (cells.empty()) continue;
                    if (cells.size() != 5) throw ValidationError("rubric row needs 5 fields: " + line);
                    try {
                        scores.push_back({cells[0], std::stoi(cells[1]), std::stoi(cells[2]), std::stoi(cells[3]), cells[4]});
                    } catch (const std::logic_error&) {
                        throw ValidationError("rubric scores must be integers: " + line);
                    }
                }
                const auto s = aggregate_rubric(scores);
                out["rubric"] = {{"helpfulness", s.helpfulness},
                                 {"novelty", s.novelty},
                                 {"clarity", s.clarity},
                                 {"perfect_share", s.perfect_share},
                                 {"n_rewrites", s.n_rewrites}};
            }
            if (out.empty()) throw ValidationError("nothing to evaluate: give --gold or --rubric");
            print(out);
        } else if (*report_cmd) {
            auto ctx = open_context(config_path, true);
            Pipeline pipeline(*ctx.store, ctx.catalog, ctx.backend.get(), ctx.pipeline_options());
            const auto bundle = pipeline.run_monthly_actions(report_month);
            write_bundle(bundle, report_out);
            json files = json::array();
            for (const auto& [name, _] : bundle.files) files.push_back(name);
            print({{"month", report_month}, {"out", report_out}, {"files", files}, {"warnings", bundle.warnings}});
        } else if (*serve_cmd) {
            auto ctx = open_context(config_path, true);
            Pipeline pipeline(*ctx.store, ctx.catalog, ctx.backend.get(), ctx.pipeline_options());
            std::string token;
            if (const char* v = ctx.config.api_token_env.empty() ? nullptr : std::getenv(ctx.config.api_token_env.c_str()))
                token = v;
            ApiServer server(*ctx.store, pipeline, ApiOptions{token, system_now});
            const auto [host, port] = split_listen_address(ctx.config.listen_address);
            const int bound = server.bind(host, port);
            g_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            spdlog::warn("listening on {}:{}", host, bound);
            server.serve();
            g_server = nullptr;
        }
    } catch (const Error& e) {
        std::cerr << json{{"code", e.code()}, {"message", e.what()}}.dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << json{{"code", "internal"}, {"message", e.what()}}.dump() << "\n";
        return 1;
    }
    return 0;
}
