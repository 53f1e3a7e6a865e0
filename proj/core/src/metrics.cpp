#include "citerec/metrics.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "citerec/error.hpp"

namespace citerec {

namespace {

void require_nonempty(const std::vector<QueryResult>& results) {
    if (results.empty()) throw EmptyResultSetError("no query results to aggregate");
}

double query_dcg(const QueryResult& r, std::size_t limit) {
    double dcg = 0.0;
    const std::size_t n = std::min(limit, r.ranked_ids.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (r.relevant.contains(r.ranked_ids[i]))
            dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    }
    return dcg;
}

double ideal_dcg(std::size_t n_relevant) {
    double idcg = 0.0;
    for (std::size_t i = 0; i < n_relevant; ++i)
        idcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    return idcg;
}

}  // namespace

double mrr(const std::vector<QueryResult>& results) {
    require_nonempty(results);
    double sum = 0.0;
    for (const QueryResult& r : results) {
        for (std::size_t i = 0; i < r.ranked_ids.size(); ++i) {
            if (r.relevant.contains(r.ranked_ids[i])) {
                sum += 1.0 / static_cast<double>(i + 1);
                break;
            }
        }
    }
    return sum / static_cast<double>(results.size());
}

double ndcg(const std::vector<QueryResult>& results) {
    require_nonempty(results);
    double sum = 0.0;
    for (const QueryResult& r : results) {
        if (r.relevant.empty()) throw EmptyResultSetError("query with empty relevant set");
        sum += query_dcg(r, r.ranked_ids.size()) / ideal_dcg(r.relevant.size());
    }
    return sum / static_cast<double>(results.size());
}

double ndcg_at_k(const std::vector<QueryResult>& results, int k) {
    require_nonempty(results);
    if (k < 1) throw ConfigError("ndcg_at_k: k must be >= 1");
    double sum = 0.0;
    for (const QueryResult& r : results) {
        if (r.relevant.empty()) throw EmptyResultSetError("query with empty relevant set");
        const std::size_t ideal_n =
            std::min<std::size_t>(static_cast<std::size_t>(k), r.relevant.size());
        sum += query_dcg(r, static_cast<std::size_t>(k)) / ideal_dcg(ideal_n);
    }
    return sum / static_cast<double>(results.size());
}

double rec_at_k(const std::vector<QueryResult>& results, int k) {
    require_nonempty(results);
    if (k < 1) throw ConfigError("rec_at_k: k must be >= 1");
    double sum = 0.0;
    for (const QueryResult& r : results) {
        if (r.relevant.empty()) throw EmptyResultSetError("query with empty relevant set");
        const std::size_t n =
            std::min<std::size_t>(static_cast<std::size_t>(k), r.ranked_ids.size());
        std::size_t hits = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (r.relevant.contains(r.ranked_ids[i])) ++hits;
        sum += static_cast<double>(hits) / static_cast<double>(r.relevant.size());
    }
    return sum / static_cast<double>(results.size());
}

EvalReport evaluate(const std::vector<QueryResult>& results,
                    const std::vector<int>& cutoffs, double wall_clock_seconds) {
    EvalReport report;
    report.n_queries = results.size();
    report.mrr = mrr(results);
    report.ndcg = ndcg(results);
    for (int k : cutoffs) report.rec_at[k] = rec_at_k(results, k);
    report.wall_clock_seconds = wall_clock_seconds;
    return report;
}

std::string EvalReport::to_json() const {
    nlohmann::json j = nlohmann::json::object();
    j["n_queries"] = n_queries;
    j["mrr"] = mrr;
    j["ndcg"] = ndcg;
    nlohmann::json r = nlohmann::json::object();
    for (const auto& [k, v] : rec_at) r["rec@" + std::to_string(k)] = v;
    j["rec_at"] = std::move(r);
    j["wall_clock_seconds"] = wall_clock_seconds;
    return j.dump(2) + "\n";
}

std::string EvalReport::csv_header() const {
    std::ostringstream out;
    out << "run_id,mode,n_queries,mrr,ndcg";
    for (const auto& [k, v] : rec_at) out << ",rec" << k;
    out << ",seconds\n";
    return out.str();
}

std::string EvalReport::to_csv_row(const std::string& run_id, const std::string& mode) const {
    std::ostringstream out;
    out.precision(10);
    out << run_id << ',' << mode << ',' << n_queries << ',' << mrr << ',' << ndcg;
    for (const auto& [k, v] : rec_at) out << ',' << v;
    out << ',' << wall_clock_seconds << '\n';
    return out.str();
}

}  // namespace citerec
