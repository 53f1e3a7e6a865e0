#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <utility>

#include "citerec/corpus.hpp"
#include "citerec/embedding.hpp"
#include "citerec/hnsw.hpp"
#include "citerec/recommender.hpp"

namespace citerec {

struct ServiceConfig {
    int default_k = 10;    // /recommend "k" when the request omits it
    int ef_search = 0;     // 0 → index default; raised to k+1 when a request needs more
    std::filesystem::path snapshot_path;  // persist_snapshot target; empty → disabled
};

struct ServiceStats {
    std::size_t count = 0;
    std::size_t dim = 0;
    HnswParams params;
    double uptime_seconds = 0.0;
    bool persisting = false;
};

/// Query/insert façade over one index: the engine behind the HTTP endpoints,
/// also usable in-process. Reads run concurrently; inserts are synchronous
/// and serialized by the index's single-writer lock, so every response
/// reflects a consistent graph.
class RecommendService {
  public:
    /// provider (optional) embeds free-text queries and inserts that carry an
    /// abstract instead of a vector.
    RecommendService(HnswIndex index, ServiceConfig cfg,
                     std::shared_ptr<EmbeddingProvider> provider = nullptr);

    /// Top-k for an indexed document, excluding the document itself.
    /// Throws UnknownIdError, EmptyIndexError.
    RecommendationList recommend_by_id(const std::string& query_id, int k) const;

    /// Top-k for an arbitrary unit vector; label only annotates the result.
    RecommendationList recommend_by_vector(const std::string& label, const EmbeddingVector& q,
                                           int k) const;

    /// Inserts and returns the dense internal id. Throws DuplicateIdError,
    /// DimMismatchError, InvalidVectorError.
    std::int32_t insert(const PatentRecord& rec, const EmbeddingVector& v);

    ServiceStats stats() const;

    /// Saves a snapshot to cfg.snapshot_path (no-op when unset). Requests
    /// arriving while the save runs are answered with 503 by the HTTP layer.
    void persist_snapshot();
    bool persisting() const { return persisting_.load(std::memory_order_acquire); }

    const HnswIndex& index() const { return index_; }

    // HTTP adapters: parse a JSON body, run the call, and map errors to
    // status codes (400 malformed request, 409 duplicate id, 503 while a
    // snapshot is being persisted). Return {status, JSON body}.
    std::pair<int, std::string> handle_recommend(const std::string& body) const;
    std::pair<int, std::string> handle_insert(const std::string& body);
    std::pair<int, std::string> handle_stats() const;

  private:
    std::vector<SearchHit> pooled_search(const EmbeddingVector& q, int n) const;

    HnswIndex index_;
    ServiceConfig cfg_;
    std::shared_ptr<EmbeddingProvider> provider_;
    std::atomic<bool> persisting_{false};
    std::chrono::steady_clock::time_point started_;
};

/// HTTP binding: POST /recommend, POST /insert, GET /stats.
class HttpService {
  public:
    /// port 0 picks a free port (see port() after start()).
    HttpService(RecommendService& service, std::string host = "127.0.0.1", int port = 0);
    ~HttpService();

    HttpService(const HttpService&) = delete;
    HttpService& operator=(const HttpService&) = delete;

    /// Binds and serves on a background thread; throws IoError when the
    /// address cannot be bound. Returns once the server accepts connections.
    void start();
    void stop();  // idempotent
    int port() const;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace citerec
