// Index microbenchmarks: insert throughput, query latency across the
// ef_search sweep (with the exhaustive scan as the exact baseline), and the
// snapshot codec.

#include <benchmark/benchmark.h>

#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "citerec/embedding.hpp"
#include "citerec/hnsw.hpp"
#include "citerec/recommender.hpp"

namespace {

using citerec::EmbeddingVector;
using citerec::HnswIndex;
using citerec::HnswParams;
using citerec::VectorMap;

constexpr std::size_t kDim = 64;

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
                                                                 std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::pair<std::string, EmbeddingVector>> points;
    points.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        points.emplace_back("B" + std::to_string(i),
                            EmbeddingVector::from_raw(random_unit(rng, kDim)));
    return points;
}

HnswParams bench_params() {
    HnswParams p;
    p.M = 16;
    p.ef_construction = 80;
    p.ef_search = 200;
    return p;
}

// Shared read-only corpus: built once, queried by every search benchmark.
struct SearchFixture {
    HnswIndex index{bench_params()};
    VectorMap vectors;
    std::unordered_set<std::string> ids;
    std::vector<EmbeddingVector> queries;

    SearchFixture() {
        for (auto& [id, vec] : make_points(10000, 11)) {
            index.insert(id, vec);
            ids.insert(id);
            vectors.emplace(std::move(id), std::move(vec));
        }
        std::mt19937_64 rng(12);
        for (int i = 0; i < 64; ++i)
            queries.push_back(EmbeddingVector::from_raw(random_unit(rng, kDim)));
    }
};

const SearchFixture& fixture() {
    static const SearchFixture f;
    return f;
}

void BM_Insert(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    const auto points = make_points(n, 21);
    for (auto _ : state) {
        HnswIndex index(bench_params());
        for (const auto& [id, vec] : points) index.insert(id, vec);
        benchmark::DoNotOptimize(index.size());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Insert)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

void BM_KnnSearch(benchmark::State& state) {
    const int ef = static_cast<int>(state.range(0));
    const SearchFixture& f = fixture();
    std::size_t i = 0;
    for (auto _ : state) {
        const auto hits = f.index.knn_search(f.queries[i++ % f.queries.size()], 100, ef);
        benchmark::DoNotOptimize(hits.data());
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_KnnSearch)->Arg(100)->Arg(200)->Arg(500)->Arg(1000)->Arg(2000)
    ->Unit(benchmark::kMicrosecond);

void BM_ExactScan(benchmark::State& state) {
    const SearchFixture& f = fixture();
    std::size_t i = 0;
    for (auto _ : state) {
        const auto list = citerec::exact_recommend(f.vectors, f.ids, "query",
                                                   f.queries[i++ % f.queries.size()], 100);
        benchmark::DoNotOptimize(list.items.data());
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ExactScan)->Unit(benchmark::kMicrosecond);

void BM_SnapshotEncode(benchmark::State& state) {
    const SearchFixture& f = fixture();
    std::size_t bytes = 0;
    for (auto _ : state) {
        const std::string blob = f.index.snapshot_bytes();
        bytes = blob.size();
        benchmark::DoNotOptimize(blob.data());
    }
    state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(bytes));
}
BENCHMARK(BM_SnapshotEncode);

void BM_SnapshotDecode(benchmark::State& state) {
    const std::string blob = fixture().index.snapshot_bytes();
    for (auto _ : state) {
        const HnswIndex restored = HnswIndex::from_snapshot_bytes(blob);
        benchmark::DoNotOptimize(restored.size());
    }
    state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(blob.size()));
}
BENCHMARK(BM_SnapshotDecode);

}  // namespace

BENCHMARK_MAIN();
