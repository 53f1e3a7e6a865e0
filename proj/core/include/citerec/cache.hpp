#pragma once

#include <filesystem>
#include <memory>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "citerec/corpus.hpp"
#include "citerec/embedding.hpp"

namespace citerec {

/// File-backed map pub_number → EmbeddingVector, tagged with the provider
/// (name, dim) that produced the vectors. A cache opened under a different
/// tag is rejected, so vectors from different providers can never mix.
///
/// Concurrency: one writer at a time (put_batch takes an exclusive lock);
/// readers may run concurrently with each other.
class EmbeddingCache {
  public:
    /// Opens path if it exists (validating the tag) or creates a new cache
    /// file tagged (provider_name, dim). Throws CacheTagMismatchError.
    static EmbeddingCache open(const std::filesystem::path& path,
                               const std::string& provider_name, std::size_t dim);

    /// Opens an existing cache, taking the tag from the file. Throws IoError
    /// if the file is missing or corrupt.
    static EmbeddingCache open_existing(const std::filesystem::path& path);

    const std::string& provider_name() const { return provider_name_; }
    std::size_t dim() const { return dim_; }
    const std::filesystem::path& path() const { return path_; }
    std::size_t size() const;
    bool contains(const std::string& id) const;

    /// Pointer stays valid for the cache's lifetime (entries are never
    /// removed); returns nullptr on miss.
    const EmbeddingVector* find(const std::string& id) const;

    /// Appends new entries and durably updates the file before returning.
    /// Ids already present are skipped; wrong-dimension vectors throw
    /// DimMismatchError.
    void put_batch(const std::vector<std::pair<std::string, EmbeddingVector>>& entries);

    /// Copy of all entries (used by evaluation, which wants a plain map).
    VectorMap to_vector_map() const;

  private:
    EmbeddingCache() = default;

    std::filesystem::path path_;
    std::string provider_name_;
    std::size_t dim_ = 0;
    std::unordered_map<std::string, EmbeddingVector> entries_;
    mutable std::unique_ptr<std::shared_mutex> mu_ = std::make_unique<std::shared_mutex>();
};

/// Returns embeddings for `records` in order, computing and durably caching
/// only the misses. Provider calls are chunked to the provider's
/// max_batch_size. Throws CacheTagMismatchError when the cache tag does not
/// match the provider; provider errors propagate.
std::vector<EmbeddingVector> cache_get_or_embed(
    EmbeddingCache& cache, EmbeddingProvider& provider,
    const std::vector<const PatentRecord*>& records);

}  // namespace citerec
