#pragma once

#include <map>
#include <string>
#include <unordered_set>
#include <vector>

namespace citerec {

/// One evaluated query: the ranked candidate ids actually returned (up to
/// pool size) and the relevant set it is judged against.
struct QueryResult {
    std::string query_id;
    std::vector<std::string> ranked_ids;
    std::unordered_set<std::string> relevant;  // non-empty
};

/// Aggregated ranking metrics over a query set.
struct EvalReport {
    std::size_t n_queries = 0;
    double mrr = 0.0;
    double ndcg = 0.0;
    std::map<int, double> rec_at;  // cutoff → mean recall
    double wall_clock_seconds = 0.0;

    /// Pretty JSON object.
    std::string to_json() const;

    /// Single CSV row: run_id, mode, n_queries, mrr, ndcg, rec@cutoffs...,
    /// seconds. Pass the matching header() so columns line up across runs.
    std::string to_csv_row(const std::string& run_id, const std::string& mode) const;
    std::string csv_header() const;
};

/// Mean reciprocal rank: 1/rank of the first relevant id; 0 when no relevant
/// id appears in the list. Throws EmptyResultSetError on empty input.
double mrr(const std::vector<QueryResult>& results);

/// Binary-gain nDCG over the full ranked list: DCG = Σ rel_i / log2(i + 1)
/// (1-based i), IDCG places all |relevant| ones on top.
double ndcg(const std::vector<QueryResult>& results);

/// nDCG truncated to the top-k positions (IDCG truncated to min(k, |relevant|)).
double ndcg_at_k(const std::vector<QueryResult>& results, int k);

/// Mean of |relevant ∩ top-k| / |relevant|.
double rec_at_k(const std::vector<QueryResult>& results, int k);

/// Convenience: full report over the standard cutoffs.
EvalReport evaluate(const std::vector<QueryResult>& results,
                    const std::vector<int>& cutoffs, double wall_clock_seconds = 0.0);

}  // namespace citerec
