#include "citerec/protocol.hpp"

#include <algorithm>
#include <sstream>

#include <json.hpp>

#include "citerec/error.hpp"
#include "citerec/util.hpp"

namespace citerec {

ProtocolMode parse_protocol_mode(const std::string& name) {
    if (name == "static") return ProtocolMode::kStatic;
    if (name == "incremental") return ProtocolMode::kIncremental;
    if (name == "rebuild") return ProtocolMode::kRebuild;
    throw ConfigError("unknown protocol mode: '" + name +
                      "' (known: static, incremental, rebuild)");
}

std::string protocol_mode_name(ProtocolMode mode) {
    switch (mode) {
        case ProtocolMode::kStatic: return "static";
        case ProtocolMode::kIncremental: return "incremental";
        case ProtocolMode::kRebuild: return "rebuild";
    }
    return "?";
}

void ProtocolConfig::validate() const {
    if (query_to < query_from)
        throw InvalidRangeError("query range inverted: " + query_from.to_string() + " > " +
                                query_to.to_string());
    if (query_from < split_date)
        throw InvalidRangeError("split date " + split_date.to_string() +
                                " must not exceed query start " + query_from.to_string());
    pipeline.validate();
    hnsw.validate();
}

std::size_t RunLog::total_queries() const {
    std::size_t n = 0;
    for (const auto& e : entries) n += e.n_queries;
    return n;
}

std::size_t RunLog::total_inserted() const {
    std::size_t n = 0;
    for (const auto& e : entries) n += e.n_inserted;
    return n;
}

double RunLog::total_retrieval_seconds() const {
    double s = 0.0;
    for (const auto& e : entries) s += e.retrieval_seconds;
    return s;
}

double RunLog::total_maintenance_seconds() const {
    double s = 0.0;
    for (const auto& e : entries) s += e.maintenance_seconds;
    return s;
}

std::string RunLog::to_csv() const {
    std::ostringstream out;
    out.precision(6);
    out << std::fixed;
    out << "date,n_queries,n_inserted,retrieval_s,maintenance_s\n";
    for (const auto& e : entries)
        out << e.date.to_string() << ',' << e.n_queries << ',' << e.n_inserted << ','
            << e.retrieval_seconds << ',' << e.maintenance_seconds << '\n';
    return out.str();
}

std::string RunLog::to_json() const {
    nlohmann::json j = nlohmann::json::object();
    j["initial_build_seconds"] = initial_build_seconds;
    j["total_queries"] = total_queries();
    j["total_inserted"] = total_inserted();
    j["total_retrieval_seconds"] = total_retrieval_seconds();
    j["total_maintenance_seconds"] = total_maintenance_seconds();
    auto rows = nlohmann::json::array();
    for (const auto& e : entries) {
        nlohmann::json row = nlohmann::json::object();
        row["date"] = e.date.to_string();
        row["n_queries"] = e.n_queries;
        row["n_inserted"] = e.n_inserted;
        row["retrieval_s"] = e.retrieval_seconds;
        row["maintenance_s"] = e.maintenance_seconds;
        rows.push_back(std::move(row));
    }
    j["dates"] = std::move(rows);
    return j.dump(2) + "\n";
}

namespace {

const EmbeddingVector& vector_for(const VectorMap& vectors, const std::string& id) {
    auto it = vectors.find(id);
    if (it == vectors.end()) throw MissingRankVectorError(id);
    return it->second;
}

/// Inserts all records filed strictly before `before` (date order, id order
/// within a date). Returns the number inserted.
std::size_t build_index_before(HnswIndex& index, const CorpusStore& corpus,
                               const VectorMap& vectors, Date before) {
    std::size_t n = 0;
    for (const auto& [date, ids] : corpus.date_index()) {
        if (!(date < before)) break;
        for (const auto& id : ids) {
            index.insert(id, vector_for(vectors, id));
            ++n;
        }
    }
    return n;
}

struct QueryPhase {
    std::vector<QueryResult> results;
    double seconds = 0.0;
};

/// Read phase for one date: answers every admitted query against the current
/// index (concurrently when cfg.query_threads allows), verifies temporal
/// hygiene, and returns results in query order.
QueryPhase answer_queries(const HnswIndex& index, const CorpusStore& corpus,
                          const VectorMap& vectors,
                          const std::map<std::string, GroundTruth>& ground_truth,
                          const std::vector<const PatentRecord*>& queries,
                          const ProtocolConfig& cfg) {
    QueryPhase phase;
    phase.results.resize(queries.size());
    const double t0 = monotonic_seconds();
    parallel_for(queries.size(), cfg.query_threads, [&](std::size_t i) {
        const PatentRecord& q = *queries[i];
        std::vector<RecItem> pool =
            rank_pool(index, vectors, q.pub_number, vector_for(vectors, q.pub_number),
                      cfg.pipeline);

        QueryResult& r = phase.results[i];
        r.query_id = q.pub_number;
        r.relevant = ground_truth.at(q.pub_number).relevant;
        r.ranked_ids.reserve(pool.size());
        for (const RecItem& item : pool) {
            const PatentRecord& candidate = corpus.at(item.id);
            if (!(candidate.filing_date < q.filing_date))
                throw TemporalHygieneError("candidate " + item.id + " (filed " +
                                           candidate.filing_date.to_string() +
                                           ") surfaced for query " + q.pub_number +
                                           " (filed " + q.filing_date.to_string() + ")");
            r.ranked_ids.push_back(item.id);
        }
    });
    phase.seconds = monotonic_seconds() - t0;
    return phase;
}

}  // namespace

ProtocolResult run_protocol(const CorpusStore& corpus, const VectorMap& vectors,
                            const ProtocolConfig& cfg) {
    cfg.validate();
    const ResolveResult resolved = resolve_citations(corpus);

    // Admitted queries per date: in range, with non-empty ground truth.
    std::vector<std::pair<Date, std::vector<const PatentRecord*>>> query_dates;
    for (auto& [date, records] : queries_by_date(corpus, cfg.query_from, cfg.query_to)) {
        std::vector<const PatentRecord*> admitted;
        for (const PatentRecord* rec : records)
            if (resolved.ground_truth.contains(rec->pub_number)) admitted.push_back(rec);
        if (!admitted.empty()) query_dates.emplace_back(date, std::move(admitted));
    }
    std::size_t n_admitted = 0;
    for (const auto& [date, admitted] : query_dates) n_admitted += admitted.size();
    if (n_admitted == 0)
        throw NoQueriesError("no queries with ground truth in [" +
                             cfg.query_from.to_string() + ", " + cfg.query_to.to_string() +
                             "]");

    ProtocolResult out;
    auto log_queries = [&out](const QueryPhase& phase) {
        for (const auto& r : phase.results) out.query_results.push_back(r);
    };

    if (cfg.mode == ProtocolMode::kStatic || cfg.mode == ProtocolMode::kIncremental) {
        HnswIndex index(cfg.hnsw);
        const double b0 = monotonic_seconds();
        build_index_before(index, corpus, vectors, cfg.split_date);
        out.log.initial_build_seconds = monotonic_seconds() - b0;

        if (cfg.mode == ProtocolMode::kStatic) {
            for (const auto& [date, admitted] : query_dates) {
                QueryPhase phase = answer_queries(index, corpus, vectors,
                                                  resolved.ground_truth, admitted, cfg);
                log_queries(phase);
                out.log.entries.push_back({date, admitted.size(), 0, phase.seconds, 0.0});
            }
        } else {
            // Stream every date carrying records in [split_date, query_to]:
            // answer that date's queries first, then insert the date's
            // records so they become visible from the next date onward.
            auto query_it = query_dates.begin();
            for (const auto& [date, ids] : corpus.date_index()) {
                if (date < cfg.split_date) continue;
                if (cfg.query_to < date) break;

                DateLogEntry entry{date, 0, 0, 0.0, 0.0};
                if (query_it != query_dates.end() && query_it->first == date) {
                    QueryPhase phase = answer_queries(index, corpus, vectors,
                                                      resolved.ground_truth,
                                                      query_it->second, cfg);
                    log_queries(phase);
                    entry.n_queries = query_it->second.size();
                    entry.retrieval_seconds = phase.seconds;
                    ++query_it;
                }

                const double m0 = monotonic_seconds();
                for (const auto& id : ids) index.insert(id, vector_for(vectors, id));
                entry.maintenance_seconds = monotonic_seconds() - m0;
                entry.n_inserted = ids.size();
                out.log.entries.push_back(entry);
            }
        }
    } else {  // rebuild: dates without queries are skipped entirely
        for (const auto& [date, admitted] : query_dates) {
            HnswIndex index(cfg.hnsw);
            const double m0 = monotonic_seconds();
            const std::size_t built = build_index_before(index, corpus, vectors, date);
            const double maintenance = monotonic_seconds() - m0;

            QueryPhase phase = answer_queries(index, corpus, vectors,
                                              resolved.ground_truth, admitted, cfg);
            log_queries(phase);
            out.log.entries.push_back(
                {date, admitted.size(), built, phase.seconds, maintenance});
        }
    }

    const double wall = out.log.initial_build_seconds + out.log.total_retrieval_seconds() +
                        out.log.total_maintenance_seconds();
    out.report = evaluate(out.query_results, cfg.pipeline.k_cutoffs, wall);
    return out;
}

ProtocolResult run_static(const CorpusStore& corpus, const VectorMap& vectors,
                          ProtocolConfig cfg) {
    cfg.mode = ProtocolMode::kStatic;
    return run_protocol(corpus, vectors, cfg);
}

ProtocolResult run_incremental(const CorpusStore& corpus, const VectorMap& vectors,
                               ProtocolConfig cfg) {
    cfg.mode = ProtocolMode::kIncremental;
    return run_protocol(corpus, vectors, cfg);
}

ProtocolResult run_rebuild(const CorpusStore& corpus, const VectorMap& vectors,
                           ProtocolConfig cfg) {
    cfg.mode = ProtocolMode::kRebuild;
    return run_protocol(corpus, vectors, cfg);
}

}  // namespace citerec
