#include <random>

#include <benchmark/benchmark.h>

#include "feedtriage/scoring.hpp"

using namespace feedtriage;

namespace {

std::vector<TripObservation> observations(std::size_t n, std::size_t entities) {
    std::mt19937 rng(7);
    std::vector<TripObservation> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& o = out[i];
        o.record_id = "t" + std::to_string(i);
        o.entity_id = "e" + std::to_string(rng() % entities);
        o.role = rng() % 2 ? EntityRole::Donor : EntityRole::Recipient;
        o.rating = 1 + static_cast<int>(rng() % 4);
        auto v = CategoryVector::all_false(o.record_id, "", Timestamp{}, "bench");
        for (auto c : kAllCategories) v.set(c, rng() % 10 == 0);
        o.vector = std::move(v);
    }
    return out;
}

void BM_ScoreAndRank(benchmark::State& state) {
    const auto obs = observations(static_cast<std::size_t>(state.range(0)), 1000);
    for (auto _ : state) {
        auto ranked = rank_entities(score_entities(obs), 5);
        benchmark::DoNotOptimize(ranked);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ScoreAndRank)->Arg(10'000)->Arg(100'000);

void BM_Concentration(benchmark::State& state) {
    const auto obs = observations(static_cast<std::size_t>(state.range(0)), 1000);
    for (auto _ : state) benchmark::DoNotOptimize(issue_concentration(obs, EntityRole::Donor, std::nullopt, 5));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Concentration)->Arg(100'000);

void BM_Correlation(benchmark::State& state) {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::pair<double, double>> pairs(static_cast<std::size_t>(state.range(0)));
    for (auto& p : pairs) p = {u(rng), 1.0 + 3.0 * u(rng)};
    for (auto _ : state) benchmark::DoNotOptimize(rating_correlation(pairs));
}
BENCHMARK(BM_Correlation)->Arg(1'000)->Arg(100'000);

}  // namespace
