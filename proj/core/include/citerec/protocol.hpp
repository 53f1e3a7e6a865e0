#pragma once

#include <string>
#include <vector>

#include "citerec/corpus.hpp"
#include "citerec/date.hpp"
#include "citerec/embedding.hpp"
#include "citerec/hnsw.hpp"
#include "citerec/metrics.hpp"
#include "citerec/recommender.hpp"

namespace citerec {

/// Time-ordered evaluation modes:
///   static      — one index frozen at the split date; queries never feed back.
///   incremental — per date: recommend for that date's queries against the
///                 current index, then insert the date's records (so they are
///                 visible from the next date onward; same-day records can
///                 never retrieve each other).
///   rebuild     — per query date: rebuild the index from scratch over
///                 everything filed strictly earlier, then answer queries.
enum class ProtocolMode { kStatic, kIncremental, kRebuild };

ProtocolMode parse_protocol_mode(const std::string& name);  // ConfigError on unknown
std::string protocol_mode_name(ProtocolMode mode);

struct ProtocolConfig {
    ProtocolMode mode = ProtocolMode::kStatic;
    Date split_date;       // index holds records filed strictly before this
    Date query_from;
    Date query_to;
    PipelineConfig pipeline;
    HnswParams hnsw;
    unsigned query_threads = 1;  // read-phase parallelism; 0 = hardware

    /// split_date ≤ query_from ≤ query_to. Throws InvalidRangeError.
    void validate() const;
};

struct DateLogEntry {
    Date date;
    std::size_t n_queries = 0;
    std::size_t n_inserted = 0;        // records inserted (or rebuilt over)
    double retrieval_seconds = 0.0;
    double maintenance_seconds = 0.0;  // insert time, or rebuild time
};

/// Per-date accounting. Embedding time never appears here: vectors are
/// precomputed, mirroring the index-maintenance focus of the evaluation.
struct RunLog {
    std::vector<DateLogEntry> entries;       // ascending by date
    double initial_build_seconds = 0.0;      // pre-split build (static/incremental)

    std::size_t total_queries() const;
    std::size_t total_inserted() const;
    double total_retrieval_seconds() const;
    double total_maintenance_seconds() const;

    /// CSV: date,n_queries,n_inserted,retrieval_s,maintenance_s.
    std::string to_csv() const;
    /// JSON summary with per-date entries and totals.
    std::string to_json() const;
};

struct ProtocolResult {
    EvalReport report;
    RunLog log;
    /// Per-query outcomes in evaluation order (date ascending, id ascending),
    /// kept so callers can compare modes query-by-query.
    std::vector<QueryResult> query_results;
};

/// Runs the configured evaluation over the corpus. `vectors` must cover
/// every record involved (pre-split, streamed, and queries); a gap raises
/// MissingRankVectorError. Queries are records inside [query_from, query_to]
/// that have non-empty resolved ground truth; if none exist, NoQueriesError.
/// Every candidate pool is checked to contain only ids filed strictly before
/// the query's date (TemporalHygieneError otherwise — it indicates a harness
/// bug, not bad data).
ProtocolResult run_protocol(const CorpusStore& corpus, const VectorMap& vectors,
                            const ProtocolConfig& cfg);

ProtocolResult run_static(const CorpusStore& corpus, const VectorMap& vectors,
                          ProtocolConfig cfg);
ProtocolResult run_incremental(const CorpusStore& corpus, const VectorMap& vectors,
                               ProtocolConfig cfg);
ProtocolResult run_rebuild(const CorpusStore& corpus, const VectorMap& vectors,
                           ProtocolConfig cfg);

}  // namespace citerec
