#include "citerec/recommender.hpp"

#include <algorithm>
#include <sstream>

#include <json.hpp>

#include "citerec/error.hpp"
#include "citerec/util.hpp"

namespace citerec {

int PipelineConfig::max_cutoff() const {
    int m = 0;
    for (int k : k_cutoffs) m = std::max(m, k);
    return m;
}

void PipelineConfig::validate() const {
    if (K < 1) throw ConfigError("pipeline: K must be >= 1");
    if (k_cutoffs.empty()) throw ConfigError("pipeline: at least one k cutoff required");
    for (int k : k_cutoffs)
        if (k < 1) throw ConfigError("pipeline: cutoffs must be positive");
    if (K < max_cutoff())
        throw ConfigError("pipeline: K (" + std::to_string(K) +
                          ") must be >= max cutoff (" + std::to_string(max_cutoff()) + ")");
}

namespace {

void sort_items(std::vector<RecItem>& items) {
    std::sort(items.begin(), items.end(), [](const RecItem& a, const RecItem& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    });
}

}  // namespace

std::vector<RecItem> rank_pool(const HnswIndex& index, const VectorMap& rank_vectors,
                               const std::string& query_id, const EmbeddingVector& q_vec,
                               const PipelineConfig& cfg) {
    cfg.validate();

    const int ef = cfg.ef_search == 0 ? index.params().ef_search : cfg.ef_search;
    if (ef < cfg.K) throw EfTooSmallError(ef, cfg.K);

    // Stage 2b: K-candidate retrieval. Ask for one extra so the pool still
    // holds K candidates when the query itself is indexed and gets filtered.
    std::vector<SearchHit> pool =
        index.knn_search(q_vec, cfg.K + 1, std::max(ef, cfg.K + 1));

    // Stage 3: re-rank under the (possibly different) ranking representation.
    const EmbeddingVector* q_rank = &q_vec;
    if (auto it = rank_vectors.find(query_id); it != rank_vectors.end()) q_rank = &it->second;

    std::vector<RecItem> items;
    items.reserve(pool.size());
    for (const SearchHit& hit : pool) {
        if (hit.external_id == query_id) continue;
        auto it = rank_vectors.find(hit.external_id);
        if (it == rank_vectors.end()) throw MissingRankVectorError(hit.external_id);
        items.push_back({hit.external_id, cosine_similarity(*q_rank, it->second)});
    }
    if (items.size() > static_cast<std::size_t>(cfg.K)) items.resize(cfg.K);
    sort_items(items);
    return items;
}

RecommendationList recommend(const HnswIndex& index, const VectorMap& rank_vectors,
                             const PatentRecord& q, const EmbeddingVector& q_vec,
                             const PipelineConfig& cfg) {
    RecommendationList rec;
    rec.query_id = q.pub_number;
    rec.k = cfg.max_cutoff();
    rec.pool_size = cfg.K;
    rec.items = rank_pool(index, rank_vectors, q.pub_number, q_vec, cfg);
    if (rec.items.size() > static_cast<std::size_t>(rec.k)) rec.items.resize(rec.k);
    return rec;
}

std::vector<RecItem> exact_rank_all(const VectorMap& all_vectors,
                                    const std::unordered_set<std::string>& eligible,
                                    const std::string& query_id,
                                    const EmbeddingVector& q_vec) {
    if (eligible.empty()) throw EmptyResultSetError("exact search over an empty id set");
    std::vector<RecItem> items;
    items.reserve(eligible.size());
    for (const auto& id : eligible) {
        if (id == query_id) continue;
        auto it = all_vectors.find(id);
        if (it == all_vectors.end()) throw MissingRankVectorError(id);
        items.push_back({id, cosine_similarity(q_vec, it->second)});
    }
    sort_items(items);
    return items;
}

RecommendationList exact_recommend(const VectorMap& all_vectors,
                                   const std::unordered_set<std::string>& eligible,
                                   const std::string& query_id,
                                   const EmbeddingVector& q_vec, int k) {
    if (k < 1) throw ConfigError("exact_recommend: k must be >= 1");
    RecommendationList rec;
    rec.query_id = query_id;
    rec.k = k;
    rec.pool_size = static_cast<int>(eligible.size());
    rec.items = exact_rank_all(all_vectors, eligible, query_id, q_vec);
    if (rec.items.size() > static_cast<std::size_t>(k)) rec.items.resize(k);
    return rec;
}

std::string recommendation_jsonl_line(const RecommendationList& rec) {
    nlohmann::json line = nlohmann::json::object();
    line["query"] = rec.query_id;
    line["pool_size"] = rec.pool_size;
    auto items = nlohmann::json::array();
    for (const RecItem& item : rec.items) {
        nlohmann::json j = nlohmann::json::object();
        j["id"] = item.id;
        j["score"] = item.score;
        items.push_back(std::move(j));
    }
    line["items"] = std::move(items);
    return line.dump();
}

void write_recommendations_jsonl(const std::vector<RecommendationList>& recs,
                                 const std::filesystem::path& path) {
    std::ostringstream out;
    for (const auto& rec : recs) out << recommendation_jsonl_line(rec) << '\n';
    write_file_atomic(path, out.str());
}

}  // namespace citerec
