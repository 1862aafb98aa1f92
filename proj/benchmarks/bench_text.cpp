#include <random>

#include <benchmark/benchmark.h>

#include "feedtriage/prompts.hpp"
#include "feedtriage/response_parser.hpp"
#include "feedtriage/rewriter.hpp"
#include "feedtriage/tfidf.hpp"

using namespace feedtriage;

namespace {

const PromptCatalog& catalog() {
    static const auto c = PromptCatalog::load(FEEDTRIAGE_BENCH_PROMPT_DIR);
    return c;
}

void BM_BuildPrompt(benchmark::State& state) {
    FeedbackRecord r;
    r.record_id = "r";
    r.donor_name = "Kroger";
    r.recipient_name = "Dumont House";
    r.comment = "The map directions took me to Alexander Street. Please adjust pick up location to Powell.";
    const auto variant = static_cast<PromptVariant>(state.range(0));
    for (auto _ : state)
        for (auto c : kAllCategories) benchmark::DoNotOptimize(build_prompt(catalog().at(c), variant, r));
}
BENCHMARK(BM_BuildPrompt)->Arg(0)->Arg(1)->Arg(2);

void BM_ParseLabel(benchmark::State& state) {
    const std::string raw = "Here is my answer:\n```json\n{\"direction_problem\": true, \"explanation\": "
                            "\"The volunteer was sent to the wrong street.\"}\n```";
    for (auto _ : state) benchmark::DoNotOptimize(parse_label_response(raw, "direction_problem"));
}
BENCHMARK(BM_ParseLabel);

void BM_Additivity(benchmark::State& state) {
    std::string original;
    for (int i = 0; i < state.range(0); ++i) original += "Enter through the loading dock and ring the bell. ";
    const auto rewritten = original + " Note: the side gate code is 1234.";
    for (auto _ : state) benchmark::DoNotOptimize(validate_additivity(original, rewritten));
}
BENCHMARK(BM_Additivity)->Arg(1)->Arg(50);

std::vector<LabeledComment> corpus(std::size_t n) {
    const std::vector<std::string> issue = {"closed", "no", "food", "nobody", "answered", "wrong", "address", "late"};
    const std::vector<std::string> fine = {"great", "thanks", "smooth", "easy", "friendly", "quick", "happy", "good"};
    std::mt19937 rng(11);
    std::vector<LabeledComment> out;
    for (std::size_t i = 0; i < n; ++i) {
        const bool bad = rng() % 3 == 0;
        const auto& words = bad ? issue : fine;
        std::string text;
        for (int w = 0; w < 8; ++w) text += words[rng() % words.size()] + " ";
        out.push_back({text, bad});
    }
    return out;
}

void BM_TfidfTrain(benchmark::State& state) {
    const auto data = corpus(static_cast<std::size_t>(state.range(0)));
    TfidfTrainOptions options;
    options.iterations = 200;
    for (auto _ : state) benchmark::DoNotOptimize(TfidfModel::train(data, options));
}
BENCHMARK(BM_TfidfTrain)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_TfidfPredict(benchmark::State& state) {
    const auto model = TfidfModel::train(corpus(500));
    for (auto _ : state) benchmark::DoNotOptimize(model.probability("store was closed and nobody answered"));
}
BENCHMARK(BM_TfidfPredict);

}  // namespace
BENCHMARK_MAIN();
