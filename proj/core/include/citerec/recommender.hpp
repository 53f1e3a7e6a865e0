#pragma once

#include <filesystem>
#include <string>
#include <unordered_set>
#include <vector>

#include "citerec/corpus.hpp"
#include "citerec/embedding.hpp"
#include "citerec/hnsw.hpp"

namespace citerec {

struct RecItem {
    std::string id;
    float score;
    bool operator==(const RecItem&) const = default;
};

/// Ranked recommendations for one query: items descend by similarity, exact
/// ties ascend by candidate id; the query itself never appears.
struct RecommendationList {
    std::string query_id;
    std::vector<RecItem> items;
    int k = 0;          // requested cutoff
    int pool_size = 0;  // K used at the retrieval stage
};

/// Retrieval/re-rank configuration: K-candidate pool, report cutoffs.
struct PipelineConfig {
    int K = 1000;
    std::vector<int> k_cutoffs = {10, 50, 100, 200};
    int ef_search = 0;  // 0 → index default

    int max_cutoff() const;
    /// K ≥ max(k_cutoffs), all cutoffs positive. Throws ConfigError.
    void validate() const;
};

/// Full pipeline pool for one query: retrieve cfg.K candidates from the
/// index, drop the query id if retrieved, and re-rank every candidate by
/// cosine similarity under rank_vectors (which may come from a different
/// representation than the index vectors). Returns the entire re-ranked
/// pool. Throws EmptyIndexError, MissingRankVectorError, EfTooSmallError.
std::vector<RecItem> rank_pool(const HnswIndex& index, const VectorMap& rank_vectors,
                               const std::string& query_id, const EmbeddingVector& q_vec,
                               const PipelineConfig& cfg);

/// rank_pool truncated to max(k_cutoffs), annotated with pool_size = cfg.K.
RecommendationList recommend(const HnswIndex& index, const VectorMap& rank_vectors,
                             const PatentRecord& q, const EmbeddingVector& q_vec,
                             const PipelineConfig& cfg);

/// Exhaustive oracle: scan every eligible id, rank by descending cosine
/// similarity (ties by id ascending). The query id is excluded if present in
/// eligible. Throws EmptyResultSetError when eligible is empty,
/// MissingRankVectorError when an eligible id has no vector.
RecommendationList exact_recommend(const VectorMap& all_vectors,
                                   const std::unordered_set<std::string>& eligible,
                                   const std::string& query_id,
                                   const EmbeddingVector& q_vec, int k);

/// Full-pool variant of exact_recommend (every eligible id, ranked).
std::vector<RecItem> exact_rank_all(const VectorMap& all_vectors,
                                    const std::unordered_set<std::string>& eligible,
                                    const std::string& query_id,
                                    const EmbeddingVector& q_vec);

/// One line per query: {"query": id, "pool_size": K, "items": [{"id":..,
/// "score":..}, ...]}.
std::string recommendation_jsonl_line(const RecommendationList& rec);
void write_recommendations_jsonl(const std::vector<RecommendationList>& recs,
                                 const std::filesystem::path& path);

}  // namespace citerec
