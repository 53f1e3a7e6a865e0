#include <doctest.h>

#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "citerec/cache.hpp"
#include "citerec/corpus.hpp"
#include "citerec/embedding.hpp"
#include "citerec/error.hpp"
#include "citerec/util.hpp"
#include "oracles.hpp"

using namespace citerec;
using testing_oracles::CountingProvider;
using testing_oracles::TempDir;

namespace {

std::vector<PatentRecord> make_records(int n) {
    std::vector<PatentRecord> out;
    for (int i = 0; i < n; ++i) {
        PatentRecord rec;
        rec.pub_number = "P" + std::to_string(i);
        rec.title = "t";
        rec.abstract_text = "abstract number " + std::to_string(i);
        rec.filing_date = Date{2024, 1, static_cast<std::uint8_t>(1 + i % 28)};
        rec.ipc_main = "G06F";
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<const PatentRecord*> pointers(const std::vector<PatentRecord>& recs) {
    std::vector<const PatentRecord*> out;
    for (const auto& r : recs) out.push_back(&r);
    return out;
}

}  // namespace

TEST_SUITE_BEGIN("cache");

TEST_CASE("fresh cache persists entries across reopen") {
    TempDir tmp("cache");
    const auto path = tmp.file("cache.bin");

    {
        EmbeddingCache cache = EmbeddingCache::open(path, "hash:8:1", 8);
        CHECK(cache.size() == 0);
        CHECK(cache.provider_name() == "hash:8:1");
        CHECK(cache.dim() == 8);
        cache.put_batch({{"A", hash_embed("a", 8, 1)}, {"B", hash_embed("b", 8, 1)}});
        CHECK(cache.size() == 2);
    }

    EmbeddingCache reopened = EmbeddingCache::open_existing(path);
    CHECK(reopened.provider_name() == "hash:8:1");
    CHECK(reopened.dim() == 8);
    REQUIRE(reopened.size() == 2);
    REQUIRE(reopened.find("A") != nullptr);
    CHECK(*reopened.find("A") == hash_embed("a", 8, 1));
    CHECK(reopened.find("C") == nullptr);
    CHECK(reopened.contains("B"));
}

TEST_CASE("appends accumulate and duplicate puts are skipped") {
    TempDir tmp("cache");
    const auto path = tmp.file("cache.bin");
    EmbeddingCache cache = EmbeddingCache::open(path, "hash:4:0", 4);

    cache.put_batch({{"A", hash_embed("a", 4, 0)}});
    cache.put_batch({{"A", hash_embed("a", 4, 0)}, {"B", hash_embed("b", 4, 0)}});
    CHECK(cache.size() == 2);

    // The on-disk count field was patched both times.
    EmbeddingCache reopened = EmbeddingCache::open_existing(path);
    CHECK(reopened.size() == 2);

    const VectorMap map = reopened.to_vector_map();
    CHECK(map.size() == 2);
    CHECK(map.at("B") == hash_embed("b", 4, 0));
}

TEST_CASE("put_batch rejects wrong-dimension vectors") {
    TempDir tmp("cache");
    EmbeddingCache cache = EmbeddingCache::open(tmp.file("c.bin"), "hash:4:0", 4);
    CHECK_THROWS_AS(cache.put_batch({{"A", hash_embed("a", 8, 0)}}), DimMismatchError);
}

TEST_CASE("reopening under a different tag is rejected") {
    TempDir tmp("cache");
    const auto path = tmp.file("cache.bin");
    EmbeddingCache::open(path, "hash:8:1", 8);

    CHECK_THROWS_AS(EmbeddingCache::open(path, "hash:8:2", 8), CacheTagMismatchError);
    CHECK_THROWS_AS(EmbeddingCache::open(path, "hash:8:1", 16), CacheTagMismatchError);
    CHECK_NOTHROW(EmbeddingCache::open(path, "hash:8:1", 8));
}

TEST_CASE("corrupt or foreign files are rejected") {
    TempDir tmp("cache");

    SUBCASE("missing file") {
        CHECK_THROWS_AS(EmbeddingCache::open_existing(tmp.file("absent.bin")), IoError);
    }

    SUBCASE("wrong magic") {
        const auto p = tmp.file("not_a_cache.bin");
        write_file_atomic(p, "JUNKJUNKJUNKJUNK");
        CHECK_THROWS_AS(EmbeddingCache::open_existing(p), IoError);
    }

    SUBCASE("unsupported format version") {
        const auto p = tmp.file("future.bin");
        std::string buf;
        BufWriter w(buf);
        w.bytes("EMBC", 4);
        w.u16(99);
        w.str16("hash:4:0");
        w.u32(4);
        w.u64(0);
        write_file_atomic(p, buf);
        CHECK_THROWS_AS(EmbeddingCache::open_existing(p), FormatVersionMismatchError);
    }

    SUBCASE("truncated records") {
        const auto p = tmp.file("trunc.bin");
        EmbeddingCache cache = EmbeddingCache::open(p, "hash:4:0", 4);
        cache.put_batch({{"A", hash_embed("a", 4, 0)}, {"B", hash_embed("b", 4, 0)}});
        const std::string full = read_file_bytes(p);
        write_file_atomic(p, full.substr(0, full.size() - 5));
        CHECK_THROWS_AS(EmbeddingCache::open_existing(p), IoError);
    }

    SUBCASE("trailing garbage") {
        const auto p = tmp.file("trailing.bin");
        EmbeddingCache cache = EmbeddingCache::open(p, "hash:4:0", 4);
        cache.put_batch({{"A", hash_embed("a", 4, 0)}});
        std::ofstream out(p, std::ios::binary | std::ios::app);
        out << "extra";
        out.close();
        CHECK_THROWS_AS(EmbeddingCache::open_existing(p), IoError);
    }
}

TEST_CASE("cache_get_or_embed computes only the misses, in order") {
    TempDir tmp("cache");
    const auto records = make_records(10);
    const auto recs = pointers(records);

    auto inner = std::make_shared<HashProvider>(16, 3);
    CountingProvider provider(inner);
    EmbeddingCache cache = EmbeddingCache::open(tmp.file("c.bin"), provider.name(), 16);

    // Warm the cache with the first 4 records.
    const std::vector<const PatentRecord*> head(recs.begin(), recs.begin() + 4);
    const auto first = cache_get_or_embed(cache, provider, head);
    CHECK(first.size() == 4);
    CHECK(provider.texts_embedded == 4);

    // Full pass: only the 6 new records hit the provider.
    const auto all = cache_get_or_embed(cache, provider, recs);
    REQUIRE(all.size() == 10);
    CHECK(provider.texts_embedded == 10);
    for (std::size_t i = 0; i < all.size(); ++i)
        CHECK(all[i] == hash_embed(records[i].abstract_text, 16, 3));

    // Fully warm: zero provider calls.
    const std::size_t calls_before = provider.calls;
    const auto again = cache_get_or_embed(cache, provider, recs);
    CHECK(provider.calls == calls_before);
    CHECK(again == all);
}

TEST_CASE("cache_get_or_embed chunks misses to the provider batch limit") {
    TempDir tmp("cache");
    const auto records = make_records(10);
    const auto recs = pointers(records);

    auto inner = std::make_shared<HashProvider>(8, 1);
    CountingProvider provider(inner, /*max_batch=*/3);
    EmbeddingCache cache = EmbeddingCache::open(tmp.file("c.bin"), provider.name(), 8);

    cache_get_or_embed(cache, provider, recs);
    CHECK(provider.calls == 4);  // 3 + 3 + 3 + 1
    CHECK(provider.largest_batch == 3);
    CHECK(provider.texts_embedded == 10);

    // Each chunk was durably written: a reopened cache sees everything.
    CHECK(EmbeddingCache::open_existing(cache.path()).size() == 10);
}

TEST_CASE("cache_get_or_embed rejects a provider that does not match the tag") {
    TempDir tmp("cache");
    HashProvider provider(8, 1);
    EmbeddingCache wrong_name = EmbeddingCache::open(tmp.file("a.bin"), "hash:8:2", 8);
    CHECK_THROWS_AS(cache_get_or_embed(wrong_name, provider, {}), CacheTagMismatchError);
}

TEST_SUITE_END();
