#include "citerec/service.hpp"

#include <algorithm>
#include <thread>

#include <json.hpp>

#include "citerec/date.hpp"
#include "citerec/error.hpp"
#include "http_all.hpp"

namespace citerec {

namespace {

using nlohmann::json;

std::string error_body(const std::string& message) {
    return json{{"error", message}}.dump();
}

json recommendation_json(const RecommendationList& rec) {
    json items = json::array();
    for (const auto& item : rec.items) items.push_back({{"id", item.id}, {"score", item.score}});
    return json{{"query", rec.query_id},
                {"k", rec.k},
                {"pool_size", rec.pool_size},
                {"items", std::move(items)}};
}

// RAII flag for the persistence window.
struct FlagGuard {
    std::atomic<bool>& flag;
    explicit FlagGuard(std::atomic<bool>& f) : flag(f) { flag.store(true, std::memory_order_release); }
    ~FlagGuard() { flag.store(false, std::memory_order_release); }
};

}  // namespace

RecommendService::RecommendService(HnswIndex index, ServiceConfig cfg,
                                   std::shared_ptr<EmbeddingProvider> provider)
    : index_(std::move(index)),
      cfg_(std::move(cfg)),
      provider_(std::move(provider)),
      started_(std::chrono::steady_clock::now()) {
    if (cfg_.default_k < 1) throw ConfigError("service: default_k must be >= 1");
}

std::vector<SearchHit> RecommendService::pooled_search(const EmbeddingVector& q, int n) const {
    const int base_ef = cfg_.ef_search > 0 ? cfg_.ef_search : index_.params().ef_search;
    return index_.knn_search(q, n, std::max(base_ef, n));
}

RecommendationList RecommendService::recommend_by_id(const std::string& query_id, int k) const {
    if (k < 1) throw ConfigError("k must be >= 1");
    const std::int32_t internal = index_.internal_id_of(query_id);
    if (internal < 0) throw UnknownIdError(query_id);
    const EmbeddingVector q = EmbeddingVector::from_raw(index_.vector_of(internal));

    // One extra candidate so dropping the query itself still leaves k.
    std::vector<SearchHit> hits = pooled_search(q, k + 1);
    RecommendationList out;
    out.query_id = query_id;
    out.k = k;
    out.pool_size = static_cast<int>(hits.size());
    for (const auto& hit : hits) {
        if (hit.external_id == query_id) continue;
        if (static_cast<int>(out.items.size()) == k) break;
        out.items.push_back({hit.external_id, hit.similarity});
    }
    return out;
}

RecommendationList RecommendService::recommend_by_vector(const std::string& label,
                                                         const EmbeddingVector& q, int k) const {
    if (k < 1) throw ConfigError("k must be >= 1");
    std::vector<SearchHit> hits = pooled_search(q, k);
    RecommendationList out;
    out.query_id = label;
    out.k = k;
    out.pool_size = static_cast<int>(hits.size());
    out.items.reserve(hits.size());
    for (const auto& hit : hits) out.items.push_back({hit.external_id, hit.similarity});
    return out;
}

std::int32_t RecommendService::insert(const PatentRecord& rec, const EmbeddingVector& v) {
    return index_.insert(rec.pub_number, v);
}

ServiceStats RecommendService::stats() const {
    ServiceStats s;
    s.count = index_.size();
    s.dim = index_.dim();
    s.params = index_.params();
    s.uptime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
    s.persisting = persisting();
    return s;
}

void RecommendService::persist_snapshot() {
    if (cfg_.snapshot_path.empty()) return;
    FlagGuard guard(persisting_);
    index_.save(cfg_.snapshot_path);
}

std::pair<int, std::string> RecommendService::handle_recommend(const std::string& body) const {
    if (persisting()) return {503, error_body("snapshot persistence in progress")};
    json req = json::parse(body, nullptr, false);
    if (req.is_discarded() || !req.is_object()) return {400, error_body("body must be a JSON object")};

    int k = cfg_.default_k;
    if (req.contains("k")) {
        if (!req["k"].is_number_integer() || req["k"].get<std::int64_t>() < 1)
            return {400, error_body("\"k\" must be a positive integer")};
        k = static_cast<int>(req["k"].get<std::int64_t>());
    }

    const bool has_id = req.contains("query_id");
    const bool has_abstract = req.contains("abstract");
    if (has_id == has_abstract)
        return {400, error_body("provide exactly one of \"query_id\" or \"abstract\"")};

    try {
        if (has_id) {
            if (!req["query_id"].is_string())
                return {400, error_body("\"query_id\" must be a string")};
            return {200, recommendation_json(recommend_by_id(req["query_id"], k)).dump()};
        }
        if (!req["abstract"].is_string() || req["abstract"].get<std::string>().empty())
            return {400, error_body("\"abstract\" must be a non-empty string")};
        if (!provider_)
            return {400, error_body("free-text queries need an embedding provider")};
        const EmbeddingVector q = provider_->embed_batch({req["abstract"]}).at(0);
        return {200, recommendation_json(recommend_by_vector("adhoc", q, k)).dump()};
    } catch (const UnknownIdError& e) {
        return {400, error_body(e.what())};
    } catch (const EmptyIndexError& e) {
        return {400, error_body(e.what())};
    } catch (const DimMismatchError& e) {
        return {400, error_body(e.what())};
    } catch (const ProviderError& e) {
        return {502, error_body(e.what())};
    }
}

std::pair<int, std::string> RecommendService::handle_insert(const std::string& body) {
    if (persisting()) return {503, error_body("snapshot persistence in progress")};
    json req = json::parse(body, nullptr, false);
    if (req.is_discarded() || !req.is_object()) return {400, error_body("body must be a JSON object")};

    PatentRecord rec;
    if (!req.contains("pub_number") || !req["pub_number"].is_string() ||
        req["pub_number"].get<std::string>().empty())
        return {400, error_body("\"pub_number\" must be a non-empty string")};
    rec.pub_number = req["pub_number"];

    if (req.contains("filing_date")) {
        if (!req["filing_date"].is_string())
            return {400, error_body("\"filing_date\" must be a YYYY-MM-DD string")};
        const auto parsed = Date::parse(req["filing_date"].get<std::string>());
        if (!parsed) return {400, error_body("\"filing_date\" must be a valid YYYY-MM-DD date")};
        rec.filing_date = *parsed;
    }
    if (req.contains("title") && req["title"].is_string()) rec.title = req["title"];
    if (req.contains("abstract") && req["abstract"].is_string())
        rec.abstract_text = req["abstract"];

    const bool has_vector = req.contains("vector");
    try {
        EmbeddingVector v;
        if (has_vector) {
            if (!req["vector"].is_array()) return {400, error_body("\"vector\" must be an array")};
            std::vector<float> raw;
            raw.reserve(req["vector"].size());
            for (const auto& x : req["vector"]) {
                if (!x.is_number()) return {400, error_body("\"vector\" must hold numbers only")};
                raw.push_back(x.get<float>());
            }
            v = EmbeddingVector::from_raw(std::move(raw));
        } else {
            if (rec.abstract_text.empty())
                return {400, error_body("provide \"vector\" or a non-empty \"abstract\"")};
            if (!provider_)
                return {400, error_body("abstract-only inserts need an embedding provider")};
            v = provider_->embed_batch({rec.abstract_text}).at(0);
        }
        const std::int32_t internal = insert(rec, v);
        return {200, json{{"internal_id", internal}, {"pub_number", rec.pub_number}}.dump()};
    } catch (const DuplicateIdError& e) {
        return {409, error_body(e.what())};
    } catch (const DimMismatchError& e) {
        return {400, error_body(e.what())};
    } catch (const InvalidVectorError& e) {
        return {400, error_body(e.what())};
    } catch (const ProviderError& e) {
        return {502, error_body(e.what())};
    }
}

std::pair<int, std::string> RecommendService::handle_stats() const {
    const ServiceStats s = stats();
    json j{{"count", s.count},
           {"dim", s.dim},
           {"uptime_seconds", s.uptime_seconds},
           {"persisting", s.persisting},
           {"params",
            {{"M", s.params.M},
             {"M_max0", s.params.effective_m_max0()},
             {"ef_construction", s.params.ef_construction},
             {"ef_search", s.params.ef_search},
             {"level_multiplier", s.params.effective_level_multiplier()},
             {"rng_seed", s.params.rng_seed}}}};
    return {200, j.dump()};
}

struct HttpService::Impl {
    RecommendService& service;
    std::string host;
    int requested_port;
    int bound_port = -1;
    httplib::Server server;
    std::thread worker;

    Impl(RecommendService& svc, std::string h, int p)
        : service(svc), host(std::move(h)), requested_port(p) {
        server.Post("/recommend", [this](const httplib::Request& req, httplib::Response& res) {
            auto [status, body] = service.handle_recommend(req.body);
            res.status = status;
            res.set_content(body, "application/json");
        });
        server.Post("/insert", [this](const httplib::Request& req, httplib::Response& res) {
            auto [status, body] = service.handle_insert(req.body);
            res.status = status;
            res.set_content(body, "application/json");
        });
        server.Get("/stats", [this](const httplib::Request&, httplib::Response& res) {
            auto [status, body] = service.handle_stats();
            res.status = status;
            res.set_content(body, "application/json");
        });
    }
};

HttpService::HttpService(RecommendService& service, std::string host, int port)
    : impl_(std::make_unique<Impl>(service, std::move(host), port)) {}

HttpService::~HttpService() { stop(); }

void HttpService::start() {
    if (impl_->requested_port == 0) {
        impl_->bound_port = impl_->server.bind_to_any_port(impl_->host);
        if (impl_->bound_port < 0)
            throw IoError("could not bind " + impl_->host + " to any port");
    } else {
        if (!impl_->server.bind_to_port(impl_->host, impl_->requested_port))
            throw IoError("could not bind " + impl_->host + ":" +
                          std::to_string(impl_->requested_port));
        impl_->bound_port = impl_->requested_port;
    }
    impl_->worker = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

void HttpService::stop() {
    if (impl_->server.is_running()) impl_->server.stop();
    if (impl_->worker.joinable()) impl_->worker.join();
}

int HttpService::port() const { return impl_->bound_port; }

}  // namespace citerec
