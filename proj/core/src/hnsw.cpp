#include "citerec/hnsw.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <queue>

#include "citerec/error.hpp"
#include "citerec/util.hpp"

namespace citerec {

// ---------------------------------------------------------------------------
// Params / level sampling

double HnswParams::effective_level_multiplier() const {
    if (level_multiplier > 0.0) return level_multiplier;
    return 1.0 / std::log(static_cast<double>(M));
}

void HnswParams::validate() const {
    if (M < 2) throw ConfigError("hnsw: M must be >= 2");
    if (M_max0 < 0) throw ConfigError("hnsw: M_max0 must be >= 0 (0 means 2*M)");
    if (ef_construction < M) throw ConfigError("hnsw: ef_construction must be >= M");
    if (ef_search < 1) throw ConfigError("hnsw: ef_search must be >= 1");
    if (level_multiplier < 0.0) throw ConfigError("hnsw: level multiplier must be >= 0");
}

int LevelSampler::level_for(std::uint64_t seed, std::uint64_t counter, double multiplier) {
    const std::uint64_t bits = splitmix64(splitmix64(seed) + counter);
    // Top 53 bits to (0, 1]: U can reach 1 (level 0) but never 0.
    const double u = (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
    return static_cast<int>(std::floor(-std::log(u) * multiplier));
}

int LevelSampler::next() { return level_for(seed, counter++, multiplier); }

// ---------------------------------------------------------------------------
// Construction

HnswIndex::HnswIndex() : HnswIndex(HnswParams{}) {}

HnswIndex::HnswIndex(HnswParams params)
    : params_(params), mu_(std::make_unique<std::shared_mutex>()) {
    params_.validate();
    sampler_ = LevelSampler{params_.rng_seed, params_.effective_level_multiplier(), 0};
}

// ---------------------------------------------------------------------------
// Locked accessors

std::size_t HnswIndex::size() const {
    std::shared_lock lk(*mu_);
    return external_ids_.size();
}

std::size_t HnswIndex::dim() const {
    std::shared_lock lk(*mu_);
    return dim_;
}

bool HnswIndex::contains(const std::string& external_id) const {
    std::shared_lock lk(*mu_);
    return id_map_.contains(external_id);
}

std::int32_t HnswIndex::internal_id_of(const std::string& external_id) const {
    std::shared_lock lk(*mu_);
    auto it = id_map_.find(external_id);
    return it == id_map_.end() ? -1 : it->second;
}

int HnswIndex::max_layer() const {
    std::shared_lock lk(*mu_);
    return entry_point_ < 0 ? -1 : levels_[static_cast<std::size_t>(entry_point_)];
}

std::int32_t HnswIndex::entry_point() const {
    std::shared_lock lk(*mu_);
    return entry_point_;
}

int HnswIndex::node_level(std::int32_t internal_id) const {
    std::shared_lock lk(*mu_);
    return levels_.at(static_cast<std::size_t>(internal_id));
}

const std::string& HnswIndex::external_id(std::int32_t internal_id) const {
    std::shared_lock lk(*mu_);
    return external_ids_.at(static_cast<std::size_t>(internal_id));
}

std::vector<float> HnswIndex::vector_of(std::int32_t internal_id) const {
    std::shared_lock lk(*mu_);
    auto s = vec(internal_id);
    return {s.begin(), s.end()};
}

std::vector<std::int32_t> HnswIndex::neighbors(std::int32_t internal_id, int layer) const {
    std::shared_lock lk(*mu_);
    return links_.at(static_cast<std::size_t>(internal_id))
        .at(static_cast<std::size_t>(layer));
}

std::vector<std::int32_t> HnswIndex::nodes_at_layer(int layer) const {
    std::shared_lock lk(*mu_);
    std::vector<std::int32_t> out;
    for (std::size_t i = 0; i < levels_.size(); ++i)
        if (levels_[i] >= layer) out.push_back(static_cast<std::int32_t>(i));
    return out;
}

// ---------------------------------------------------------------------------
// Distance and ordering

double HnswIndex::node_distance(std::span<const float> q, std::int32_t node,
                                std::uint64_t* evals) const {
    if (evals) ++*evals;
    return 1.0 - dot_product(q, vec(node));
}

// Total order: nearer distance first, exact ties by external_id ascending.
bool HnswIndex::closer(double da, std::int32_t a, double db, std::int32_t b) const {
    if (da != db) return da < db;
    if (a == b) return false;
    return external_ids_[static_cast<std::size_t>(a)] <
           external_ids_[static_cast<std::size_t>(b)];
}

std::int32_t HnswIndex::greedy_descend(std::span<const float> q, std::int32_t start,
                                       int layer, std::uint64_t* evals,
                                       std::uint64_t* touched) const {
    std::int32_t cur = start;
    double cur_d = node_distance(q, cur, evals);
    if (touched) ++*touched;
    bool improved = true;
    while (improved) {
        improved = false;
        for (std::int32_t v : links_[static_cast<std::size_t>(cur)][static_cast<std::size_t>(layer)]) {
            const double d = node_distance(q, v, evals);
            if (touched) ++*touched;
            if (closer(d, v, cur_d, cur)) {
                cur = v;
                cur_d = d;
                improved = true;
            }
        }
    }
    return cur;
}

std::vector<HnswIndex::Candidate> HnswIndex::search_layer_impl(
    std::span<const float> q, std::span<const std::int32_t> entries, int ef, int layer,
    std::uint64_t* evals, std::uint64_t* touched) const {
    // W: bounded result set, worst on top. C: expansion frontier, best on top.
    auto worst_first = [this](const Candidate& a, const Candidate& b) {
        return closer(a.distance, a.id, b.distance, b.id);
    };
    auto best_first = [this](const Candidate& a, const Candidate& b) {
        return closer(b.distance, b.id, a.distance, a.id);
    };
    std::priority_queue<Candidate, std::vector<Candidate>, decltype(worst_first)> result(
        worst_first);
    std::priority_queue<Candidate, std::vector<Candidate>, decltype(best_first)> frontier(
        best_first);

    std::vector<std::uint8_t> visited(external_ids_.size(), 0);
    for (std::int32_t e : entries) {
        auto ei = static_cast<std::size_t>(e);
        if (visited[ei]) continue;
        visited[ei] = 1;
        if (touched) ++*touched;
        const double d = node_distance(q, e, evals);
        result.push({d, e});
        frontier.push({d, e});
    }
    while (result.size() > static_cast<std::size_t>(ef)) result.pop();

    while (!frontier.empty()) {
        const Candidate c = frontier.top();
        // The nearest unexpanded candidate is already worse than the worst
        // kept result: nothing reachable can improve the result set.
        if (result.size() >= static_cast<std::size_t>(ef) &&
            closer(result.top().distance, result.top().id, c.distance, c.id))
            break;
        frontier.pop();

        for (std::int32_t v :
             links_[static_cast<std::size_t>(c.id)][static_cast<std::size_t>(layer)]) {
            auto vi = static_cast<std::size_t>(v);
            if (visited[vi]) continue;
            visited[vi] = 1;
            if (touched) ++*touched;
            const double d = node_distance(q, v, evals);
            if (result.size() < static_cast<std::size_t>(ef) ||
                closer(d, v, result.top().distance, result.top().id)) {
                frontier.push({d, v});
                result.push({d, v});
                if (result.size() > static_cast<std::size_t>(ef)) result.pop();
            }
        }
    }

    std::vector<Candidate> out;
    out.reserve(result.size());
    while (!result.empty()) {
        out.push_back(result.top());
        result.pop();
    }
    std::reverse(out.begin(), out.end());  // ascending (distance, external_id)
    return out;
}

std::vector<std::int32_t> HnswIndex::select_neighbors(std::vector<Candidate> candidates,
                                                      int m, std::uint64_t* evals) const {
    // Diversity heuristic: keep a candidate only when it is strictly closer
    // to the base point than to every neighbor kept so far; then fill any
    // remaining slots from the rejected candidates, nearest first.
    std::vector<std::int32_t> kept;
    std::vector<Candidate> rejected;
    for (const Candidate& c : candidates) {
        if (kept.size() >= static_cast<std::size_t>(m)) break;
        bool diverse = true;
        for (std::int32_t r : kept) {
            const double d_cr = node_distance(vec(c.id), r, evals);
            if (d_cr <= c.distance) {
                diverse = false;
                break;
            }
        }
        if (diverse)
            kept.push_back(c.id);
        else
            rejected.push_back(c);
    }
    for (const Candidate& c : rejected) {
        if (kept.size() >= static_cast<std::size_t>(m)) break;
        kept.push_back(c.id);
    }
    return kept;
}

void HnswIndex::prune_node(std::int32_t node, int layer, int cap, std::uint64_t* evals) {
    auto& list = links_[static_cast<std::size_t>(node)][static_cast<std::size_t>(layer)];
    if (list.size() <= static_cast<std::size_t>(cap)) return;

    const std::span<const float> base = vec(node);
    std::vector<Candidate> candidates;
    candidates.reserve(list.size());
    for (std::int32_t v : list)
        candidates.push_back({node_distance(base, v, evals), v});
    std::sort(candidates.begin(), candidates.end(),
              [this](const Candidate& a, const Candidate& b) {
                  return closer(a.distance, a.id, b.distance, b.id);
              });

    std::vector<std::int32_t> kept = select_neighbors(std::move(candidates), cap, evals);

    // Dropped edges are removed from both endpoints to keep adjacency
    // symmetric; the dropped neighbor is not refilled (its degree only
    // shrinks, so its own bound still holds).
    std::vector<std::uint8_t> keep_mark;
    {
        std::int32_t max_id = 0;
        for (std::int32_t v : list) max_id = std::max(max_id, v);
        keep_mark.assign(static_cast<std::size_t>(max_id) + 1, 0);
        for (std::int32_t v : kept) keep_mark[static_cast<std::size_t>(v)] = 1;
    }
    for (std::int32_t v : list) {
        if (!keep_mark[static_cast<std::size_t>(v)])
            std::erase(links_[static_cast<std::size_t>(v)][static_cast<std::size_t>(layer)],
                       node);
    }
    list = std::move(kept);
}

// ---------------------------------------------------------------------------
// Insert

std::int32_t HnswIndex::insert(const std::string& external_id, const EmbeddingVector& v) {
    if (v.empty()) throw InvalidVectorError("insert: empty vector");
    std::unique_lock lk(*mu_);

    if (id_map_.contains(external_id)) throw DuplicateIdError(external_id);
    if (external_ids_.empty())
        dim_ = v.dim();
    else if (v.dim() != dim_)
        throw DimMismatchError(dim_, v.dim());

    const int level = sampler_.next();
    const auto internal = static_cast<std::int32_t>(external_ids_.size());

    vectors_.insert(vectors_.end(), v.values().begin(), v.values().end());
    external_ids_.push_back(external_id);
    levels_.push_back(level);
    links_.emplace_back(static_cast<std::size_t>(level) + 1);
    for (auto& l : links_.back())
        l.reserve(static_cast<std::size_t>(params_.effective_m_max0()) + 1);
    id_map_.emplace(external_id, internal);

    std::uint64_t evals = 0, touched = 0;

    if (entry_point_ < 0) {
        entry_point_ = internal;
        last_evals_ = last_touched_ = 0;
        return internal;
    }

    const std::span<const float> q = vec(internal);
    const int top = levels_[static_cast<std::size_t>(entry_point_)];

    std::int32_t cur = entry_point_;
    for (int lc = top; lc > level; --lc)
        cur = greedy_descend(q, cur, lc, &evals, &touched);

    std::vector<std::int32_t> entries{cur};
    for (int lc = std::min(level, top); lc >= 0; --lc) {
        std::vector<Candidate> found =
            search_layer_impl(q, entries, params_.ef_construction, lc, &evals, &touched);
        std::vector<std::int32_t> selected = select_neighbors(found, params_.M, &evals);

        const int cap = lc == 0 ? params_.effective_m_max0() : params_.M;
        auto& own = links_[static_cast<std::size_t>(internal)][static_cast<std::size_t>(lc)];
        for (std::int32_t n : selected) {
            own.push_back(n);
            auto& theirs = links_[static_cast<std::size_t>(n)][static_cast<std::size_t>(lc)];
            theirs.push_back(internal);
            if (theirs.size() > static_cast<std::size_t>(cap))
                prune_node(n, lc, cap, &evals);
        }

        entries.clear();
        entries.reserve(found.size());
        for (const Candidate& c : found) entries.push_back(c.id);
    }

    if (level > top) entry_point_ = internal;
    last_evals_ = evals;
    last_touched_ = touched;
    return internal;
}

// ---------------------------------------------------------------------------
// Search

std::vector<SearchHit> HnswIndex::knn_search(const EmbeddingVector& q, int k,
                                             int ef_search) const {
    std::shared_lock lk(*mu_);
    if (external_ids_.empty()) throw EmptyIndexError("knn_search on an empty index");
    if (k < 1) throw ConfigError("knn_search: k must be >= 1");
    if (q.dim() != dim_) throw DimMismatchError(dim_, q.dim());

    const int ef = ef_search == 0 ? params_.ef_search : ef_search;
    if (ef < k) throw EfTooSmallError(ef, k);
    const std::size_t k_eff = std::min<std::size_t>(static_cast<std::size_t>(k),
                                                    external_ids_.size());

    const std::span<const float> qs = q.values();
    std::int32_t cur = entry_point_;
    for (int lc = levels_[static_cast<std::size_t>(entry_point_)]; lc >= 1; --lc)
        cur = greedy_descend(qs, cur, lc, nullptr, nullptr);

    const std::int32_t entry_arr[1] = {cur};
    std::vector<Candidate> found =
        search_layer_impl(qs, entry_arr, ef, 0, nullptr, nullptr);

    std::vector<SearchHit> out;
    out.reserve(std::min(k_eff, found.size()));
    for (std::size_t i = 0; i < found.size() && i < k_eff; ++i) {
        const float sim = static_cast<float>(std::clamp(1.0 - found[i].distance, -1.0, 1.0));
        out.push_back({external_ids_[static_cast<std::size_t>(found[i].id)], sim});
    }
    return out;
}

std::vector<ScoredNeighbor> HnswIndex::search_layer(
    const EmbeddingVector& q, const std::vector<std::int32_t>& entries, int ef,
    int layer) const {
    std::shared_lock lk(*mu_);
    if (external_ids_.empty()) throw EmptyIndexError("search_layer on an empty index");
    if (q.dim() != dim_) throw DimMismatchError(dim_, q.dim());
    if (ef < 1) throw ConfigError("search_layer: ef must be >= 1");
    if (layer < 0 || layer > levels_[static_cast<std::size_t>(entry_point_)])
        throw ConfigError("search_layer: layer out of range");
    if (entries.empty()) throw ConfigError("search_layer: no entry points");
    for (std::int32_t e : entries) {
        if (e < 0 || static_cast<std::size_t>(e) >= external_ids_.size())
            throw ConfigError("search_layer: entry id out of range");
        if (levels_[static_cast<std::size_t>(e)] < layer)
            throw ConfigError("search_layer: entry node absent from layer");
    }

    std::vector<Candidate> found =
        search_layer_impl(q.values(), entries, ef, layer, nullptr, nullptr);
    std::vector<ScoredNeighbor> out;
    out.reserve(found.size());
    for (const Candidate& c : found) out.push_back({c.id, c.distance});
    return out;
}

// ---------------------------------------------------------------------------
// Audit

StructureAudit HnswIndex::audit() const {
    std::shared_lock lk(*mu_);
    StructureAudit a;
    a.nodes = external_ids_.size();
    if (a.nodes == 0) return a;

    int global_max = 0;
    for (int l : levels_) global_max = std::max(global_max, l);
    a.max_layer = global_max;
    a.entry_point_maximal =
        entry_point_ >= 0 && levels_[static_cast<std::size_t>(entry_point_)] == global_max;

    for (std::size_t i = 0; i < a.nodes; ++i) {
        if (links_[i].size() != static_cast<std::size_t>(levels_[i]) + 1) {
            ++a.missing_layers;
            continue;
        }
        for (std::size_t l = 0; l < links_[i].size(); ++l) {
            const auto& list = links_[i][l];
            const std::size_t bound = l == 0
                                          ? static_cast<std::size_t>(params_.effective_m_max0())
                                          : static_cast<std::size_t>(params_.M);
            if (list.size() > bound) ++a.degree_violations;

            std::vector<std::int32_t> sorted_list(list);
            std::sort(sorted_list.begin(), sorted_list.end());
            for (std::size_t j = 1; j < sorted_list.size(); ++j)
                if (sorted_list[j] == sorted_list[j - 1]) ++a.duplicate_neighbors;

            for (std::int32_t v : list) {
                if (v == static_cast<std::int32_t>(i)) {
                    ++a.self_loops;
                    continue;
                }
                const auto vi = static_cast<std::size_t>(v);
                if (vi >= a.nodes || links_[vi].size() <= l) {
                    ++a.asymmetric_edges;
                    continue;
                }
                const auto& back = links_[vi][l];
                if (std::find(back.begin(), back.end(), static_cast<std::int32_t>(i)) ==
                    back.end())
                    ++a.asymmetric_edges;
            }
        }
    }

    // Layer-0 BFS from the entry point; every node must be reachable.
    std::vector<std::uint8_t> seen(a.nodes, 0);
    std::vector<std::int32_t> stack{entry_point_};
    seen[static_cast<std::size_t>(entry_point_)] = 1;
    std::size_t reached = 0;
    while (!stack.empty()) {
        const std::int32_t u = stack.back();
        stack.pop_back();
        ++reached;
        for (std::int32_t v : links_[static_cast<std::size_t>(u)][0]) {
            auto vi = static_cast<std::size_t>(v);
            if (vi < a.nodes && !seen[vi]) {
                seen[vi] = 1;
                stack.push_back(v);
            }
        }
    }
    a.layer0_reachable = reached;
    return a;
}

}  // namespace citerec
