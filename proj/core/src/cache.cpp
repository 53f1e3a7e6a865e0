#include "citerec/cache.hpp"

#include <fstream>
#include <mutex>

#include "citerec/error.hpp"
#include "citerec/util.hpp"

namespace citerec {

namespace {

constexpr char kMagic[4] = {'E', 'M', 'B', 'C'};
constexpr std::uint16_t kFormatVersion = 1;

std::string header_bytes(const std::string& provider_name, std::size_t dim,
                         std::uint64_t count) {
    std::string buf;
    BufWriter w(buf);
    w.bytes(kMagic, 4);
    w.u16(kFormatVersion);
    w.str16(provider_name);
    w.u32(static_cast<std::uint32_t>(dim));
    w.u64(count);
    return buf;
}

// Byte offset of the record-count field (patched in place on append).
std::size_t count_offset(const std::string& provider_name) {
    return 4 + 2 + 2 + provider_name.size() + 4;
}

}  // namespace

EmbeddingCache EmbeddingCache::open(const std::filesystem::path& path,
                                    const std::string& provider_name, std::size_t dim) {
    if (std::filesystem::exists(path)) {
        EmbeddingCache cache = open_existing(path);
        if (cache.provider_name_ != provider_name || cache.dim_ != dim)
            throw CacheTagMismatchError(
                "cache " + path.string() + " is tagged (" + cache.provider_name_ + ", " +
                std::to_string(cache.dim_) + "), requested (" + provider_name + ", " +
                std::to_string(dim) + ")");
        return cache;
    }
    if (dim == 0) throw InvalidVectorError("cache dim must be positive");
    EmbeddingCache cache;
    cache.path_ = path;
    cache.provider_name_ = provider_name;
    cache.dim_ = dim;
    write_file_atomic(path, header_bytes(provider_name, dim, 0));
    return cache;
}

EmbeddingCache EmbeddingCache::open_existing(const std::filesystem::path& path) {
    const std::string data = read_file_bytes(path);
    EmbeddingCache cache;
    cache.path_ = path;
    try {
        BufReader r(data);
        char magic[4];
        r.bytes(magic, 4);
        if (std::memcmp(magic, kMagic, 4) != 0)
            throw IoError("not an embedding cache: " + path.string());
        const std::uint16_t version = r.u16();
        if (version != kFormatVersion)
            throw FormatVersionMismatchError("cache format version " +
                                             std::to_string(version) + " unsupported");
        cache.provider_name_ = r.str16();
        cache.dim_ = r.u32();
        if (cache.dim_ == 0) throw IoError("cache header has dim 0");
        const std::uint64_t count = r.u64();
        cache.entries_.reserve(count);
        for (std::uint64_t i = 0; i < count; ++i) {
            std::string id = r.str16();
            std::vector<float> values(cache.dim_);
            for (auto& v : values) v = r.f32();
            auto [it, inserted] =
                cache.entries_.emplace(std::move(id), EmbeddingVector::from_raw(std::move(values)));
            if (!inserted) throw IoError("cache contains a duplicate id: " + it->first);
        }
        if (r.remaining() != 0)
            throw IoError("trailing bytes after " + std::to_string(count) +
                          " records in " + path.string());
    } catch (const BufferUnderflowError&) {
        throw IoError("cache file truncated or corrupt: " + path.string());
    }
    return cache;
}

std::size_t EmbeddingCache::size() const {
    std::shared_lock lk(*mu_);
    return entries_.size();
}

bool EmbeddingCache::contains(const std::string& id) const {
    std::shared_lock lk(*mu_);
    return entries_.contains(id);
}

const EmbeddingVector* EmbeddingCache::find(const std::string& id) const {
    std::shared_lock lk(*mu_);
    auto it = entries_.find(id);
    return it == entries_.end() ? nullptr : &it->second;
}

void EmbeddingCache::put_batch(
    const std::vector<std::pair<std::string, EmbeddingVector>>& entries) {
    std::unique_lock lk(*mu_);

    std::string appended;
    BufWriter w(appended);
    std::size_t added = 0;
    for (const auto& [id, vec] : entries) {
        if (vec.dim() != dim_) throw DimMismatchError(dim_, vec.dim());
        if (entries_.contains(id)) continue;
        w.str16(id);
        for (float v : vec.values()) w.f32(v);
        entries_.emplace(id, vec);
        ++added;
    }
    if (added == 0) return;

    std::fstream file(path_, std::ios::binary | std::ios::in | std::ios::out);
    if (!file) throw IoError("cannot reopen cache for append: " + path_.string());
    file.seekp(0, std::ios::end);
    file.write(appended.data(), static_cast<std::streamsize>(appended.size()));

    std::string count_le;
    BufWriter cw(count_le);
    cw.u64(entries_.size());
    file.seekp(static_cast<std::streamoff>(count_offset(provider_name_)));
    file.write(count_le.data(), 8);
    file.flush();
    if (!file) throw IoError("cache append failed: " + path_.string());
}

VectorMap EmbeddingCache::to_vector_map() const {
    std::shared_lock lk(*mu_);
    return entries_;
}

std::vector<EmbeddingVector> cache_get_or_embed(
    EmbeddingCache& cache, EmbeddingProvider& provider,
    const std::vector<const PatentRecord*>& records) {
    if (cache.provider_name() != provider.name() || cache.dim() != provider.dim())
        throw CacheTagMismatchError("cache tagged (" + cache.provider_name() + ", " +
                                    std::to_string(cache.dim()) + "), provider is (" +
                                    provider.name() + ", " +
                                    std::to_string(provider.dim()) + ")");

    std::vector<const PatentRecord*> misses;
    for (const PatentRecord* rec : records)
        if (!cache.contains(rec->pub_number)) misses.push_back(rec);

    const std::size_t chunk_max =
        provider.max_batch_size() == 0 ? misses.size() : provider.max_batch_size();
    for (std::size_t start = 0; start < misses.size(); start += chunk_max) {
        const std::size_t end = std::min(misses.size(), start + chunk_max);
        std::vector<std::string> texts;
        texts.reserve(end - start);
        for (std::size_t i = start; i < end; ++i)
            texts.push_back(misses[i]->abstract_text);
        std::vector<EmbeddingVector> vecs = provider.embed_batch(texts);
        std::vector<std::pair<std::string, EmbeddingVector>> batch;
        batch.reserve(vecs.size());
        for (std::size_t i = start; i < end; ++i)
            batch.emplace_back(misses[i]->pub_number, std::move(vecs[i - start]));
        cache.put_batch(batch);
    }

    std::vector<EmbeddingVector> out;
    out.reserve(records.size());
    for (const PatentRecord* rec : records) {
        const EmbeddingVector* v = cache.find(rec->pub_number);
        if (!v)
            throw IoError("cache lost an entry it just wrote: " + rec->pub_number);
        out.push_back(*v);
    }
    return out;
}

}  // namespace citerec
