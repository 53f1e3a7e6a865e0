#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "citerec/embedding.hpp"

namespace citerec {

/// Construction/search parameters. Defaults for M, ef_construction, and
/// ef_search follow the production configuration this engine targets;
/// M_max0 = 2M and m_L = 1/ln(M) are the classic HNSW choices.
struct HnswParams {
    int M = 48;
    int M_max0 = 0;                 // 0 → 2 * M
    int ef_construction = 100;
    int ef_search = 2000;
    double level_multiplier = 0.0;  // m_L; 0 → 1 / ln(M)
    std::uint64_t rng_seed = 0xc17e5eedULL;

    int effective_m_max0() const { return M_max0 > 0 ? M_max0 : 2 * M; }
    double effective_level_multiplier() const;

    /// Throws ConfigError unless M ≥ 2, ef_construction ≥ M, ef_search ≥ 1.
    void validate() const;
};

/// Counter-based level source: level i of the insertion sequence depends
/// only on (seed, i), so a reloaded snapshot resumes the exact sequence
/// without serializing generator state. Levels follow floor(−ln(U) · m_L)
/// with U uniform on (0, 1].
struct LevelSampler {
    std::uint64_t seed = 0;
    double multiplier = 0.0;
    std::uint64_t counter = 0;

    int next();
    static int level_for(std::uint64_t seed, std::uint64_t counter, double multiplier);
};

struct SearchHit {
    std::string external_id;
    float similarity;
    bool operator==(const SearchHit&) const = default;
};

struct ScoredNeighbor {
    std::int32_t internal_id;
    double distance;  // cosine distance, 1 − dot
};

/// Result of a full structural self-check; clean() means every graph
/// invariant holds.
struct StructureAudit {
    std::size_t nodes = 0;
    int max_layer = -1;
    std::size_t asymmetric_edges = 0;     // u lists v but v does not list u
    std::size_t degree_violations = 0;    // list longer than the layer bound
    std::size_t self_loops = 0;
    std::size_t duplicate_neighbors = 0;  // same id twice in one list
    std::size_t missing_layers = 0;       // adjacency rows ≠ max_layer + 1
    bool entry_point_maximal = true;
    std::size_t layer0_reachable = 0;     // BFS from entry point over layer 0

    bool clean() const {
        return asymmetric_edges == 0 && degree_violations == 0 && self_loops == 0 &&
               duplicate_neighbors == 0 && missing_layers == 0 && entry_point_maximal &&
               layer0_reachable == nodes;
    }
};

/// Multi-layer navigable small-world graph over unit vectors with
/// incremental insertion and K-approximate-nearest-neighbor search under
/// cosine distance (1 − dot product).
///
/// Concurrency: single writer / many readers, enforced internally — searches
/// take a shared lock, insert takes an exclusive lock. Deletions are
/// unsupported (append-only workload).
///
/// Determinism: for a fixed rng_seed and insertion order the graph — and its
/// snapshot bytes — are identical across runs. Exact distance ties break by
/// external_id ascending everywhere.
class HnswIndex {
  public:
    HnswIndex();
    explicit HnswIndex(HnswParams params);

    HnswIndex(HnswIndex&&) noexcept = default;
    HnswIndex& operator=(HnswIndex&&) noexcept = default;
    HnswIndex(const HnswIndex&) = delete;
    HnswIndex& operator=(const HnswIndex&) = delete;

    const HnswParams& params() const { return params_; }
    std::size_t size() const;
    bool empty() const { return size() == 0; }
    std::size_t dim() const;  // 0 until the first insert fixes it
    bool contains(const std::string& external_id) const;
    std::int32_t internal_id_of(const std::string& external_id) const;  // -1 if absent

    /// Inserts a new point and wires it into every layer up to its sampled
    /// level. Returns the dense internal id. Throws DuplicateIdError,
    /// DimMismatchError.
    std::int32_t insert(const std::string& external_id, const EmbeddingVector& v);

    /// Top-k by descending cosine similarity (ties by external_id
    /// ascending); k is clamped to the current size. ef_search 0 means "use
    /// params().ef_search". Throws EmptyIndexError, EfTooSmallError (ef < k),
    /// DimMismatchError. The query need not be an indexed point.
    std::vector<SearchHit> knn_search(const EmbeddingVector& q, int k,
                                      int ef_search = 0) const;

    /// Best-first expansion on one layer from the given entry nodes,
    /// keeping the ef nearest; results ascend by (distance, external_id).
    /// Exposed for diagnostics and tests.
    std::vector<ScoredNeighbor> search_layer(const EmbeddingVector& q,
                                             const std::vector<std::int32_t>& entries,
                                             int ef, int layer) const;

    // Introspection (shared-locked).
    int max_layer() const;                       // -1 when empty
    std::int32_t entry_point() const;            // -1 when empty
    int node_level(std::int32_t internal_id) const;
    const std::string& external_id(std::int32_t internal_id) const;
    std::vector<float> vector_of(std::int32_t internal_id) const;
    std::vector<std::int32_t> neighbors(std::int32_t internal_id, int layer) const;
    std::vector<std::int32_t> nodes_at_layer(int layer) const;

    /// Locality instrumentation for the most recent insert: distinct nodes
    /// scored during the layer searches, and all distance evaluations
    /// including neighbor-selection and pruning.
    std::uint64_t last_insert_touched_nodes() const { return last_touched_; }
    std::uint64_t last_insert_distance_evals() const { return last_evals_; }
    std::uint64_t level_draws() const { return sampler_.counter; }

    StructureAudit audit() const;

    /// Snapshot I/O. save requires no concurrent writer (readers are fine);
    /// load restores params, nodes, adjacency, and entry point, and resumes
    /// the level sequence, so continued insertion behaves as if the index
    /// had never been serialized. ef_search is a runtime knob and is not
    /// part of the snapshot.
    void save(const std::filesystem::path& path) const;
    static HnswIndex load(const std::filesystem::path& path);

    /// Serialized snapshot bytes (what save writes).
    std::string snapshot_bytes() const;
    static HnswIndex from_snapshot_bytes(std::span<const char> bytes);

  private:
    struct Candidate {
        double distance;
        std::int32_t id;
    };

    // Unlocked internals; callers hold the appropriate lock.
    double node_distance(std::span<const float> q, std::int32_t node,
                         std::uint64_t* evals) const;
    bool closer(double da, std::int32_t a, double db, std::int32_t b) const;
    std::int32_t greedy_descend(std::span<const float> q, std::int32_t start, int layer,
                                std::uint64_t* evals, std::uint64_t* touched) const;
    std::vector<Candidate> search_layer_impl(std::span<const float> q,
                                             std::span<const std::int32_t> entries, int ef,
                                             int layer, std::uint64_t* evals,
                                             std::uint64_t* touched) const;
    std::vector<std::int32_t> select_neighbors(std::vector<Candidate> candidates, int m,
                                               std::uint64_t* evals) const;
    void prune_node(std::int32_t node, int layer, int cap, std::uint64_t* evals);
    std::span<const float> vec(std::int32_t id) const {
        return {vectors_.data() + static_cast<std::size_t>(id) * dim_, dim_};
    }

    HnswParams params_;
    LevelSampler sampler_;
    std::size_t dim_ = 0;
    std::vector<float> vectors_;                                  // count × dim
    std::vector<std::string> external_ids_;
    std::vector<int> levels_;
    std::vector<std::vector<std::vector<std::int32_t>>> links_;   // [node][layer]
    std::unordered_map<std::string, std::int32_t> id_map_;
    std::int32_t entry_point_ = -1;
    std::uint64_t last_touched_ = 0;
    std::uint64_t last_evals_ = 0;

    mutable std::unique_ptr<std::shared_mutex> mu_;

    friend struct SnapshotCodec;
};

}  // namespace citerec
