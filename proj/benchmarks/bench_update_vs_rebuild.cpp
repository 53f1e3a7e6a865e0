// Maintenance-cost benchmark: absorbing one date's worth of new documents by
// appending to a live index versus reconstructing the index from scratch.
// The timed region is exactly the work a rolling-update evaluation charges
// as maintenance for that date.

#include <benchmark/benchmark.h>

#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "citerec/embedding.hpp"
#include "citerec/hnsw.hpp"

namespace {

using citerec::EmbeddingVector;
using citerec::HnswIndex;
using citerec::HnswParams;

constexpr std::size_t kDim = 32;
constexpr std::size_t kBase = 2000;

std::vector<float> random_unit(std::mt19937_64& rng, std::size_t dim) {
    std::normal_distribution<float> gauss(0.0f, 1.0f);
    std::vector<float> v(dim);
    float sq = 0.0f;
    for (float& x : v) {
        x = gauss(rng);
        sq += x * x;
    }
    const float inv = 1.0f / std::sqrt(sq);
    for (float& x : v) x *= inv;
    return v;
}

std::vector<std::pair<std::string, EmbeddingVector>> make_points(std::size_t n,
                                                                 std::uint64_t seed,
                                                                 const char* prefix) {
    std::mt19937_64 rng(seed);
    std::vector<std::pair<std::string, EmbeddingVector>> points;
    points.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        points.emplace_back(prefix + std::to_string(i),
                            EmbeddingVector::from_raw(random_unit(rng, kDim)));
    return points;
}

HnswParams bench_params() {
    HnswParams p;
    p.M = 16;
    p.ef_construction = 80;
    return p;
}

const std::vector<std::pair<std::string, EmbeddingVector>>& base_points() {
    static const auto points = make_points(kBase, 31, "OLD");
    return points;
}

// Snapshot of the pre-built base index; restoring it is how each iteration
// gets a fresh writable copy without paying the build again.
const std::string& base_snapshot() {
    static const std::string blob = [] {
        HnswIndex index(bench_params());
        for (const auto& [id, vec] : base_points()) index.insert(id, vec);
        return index.snapshot_bytes();
    }();
    return blob;
}

void BM_AppendBatch(benchmark::State& state) {
    const std::size_t batch = static_cast<std::size_t>(state.range(0));
    const auto fresh = make_points(batch, 32, "NEW");
    for (auto _ : state) {
        state.PauseTiming();
        HnswIndex index = HnswIndex::from_snapshot_bytes(base_snapshot());
        state.ResumeTiming();
        for (const auto& [id, vec] : fresh) index.insert(id, vec);
        benchmark::DoNotOptimize(index.size());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch));
}
BENCHMARK(BM_AppendBatch)->Arg(20)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_RebuildWithBatch(benchmark::State& state) {
    const std::size_t batch = static_cast<std::size_t>(state.range(0));
    const auto fresh = make_points(batch, 32, "NEW");
    for (auto _ : state) {
        HnswIndex index(bench_params());
        for (const auto& [id, vec] : base_points()) index.insert(id, vec);
        for (const auto& [id, vec] : fresh) index.insert(id, vec);
        benchmark::DoNotOptimize(index.size());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch));
}
BENCHMARK(BM_RebuildWithBatch)->Arg(20)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
