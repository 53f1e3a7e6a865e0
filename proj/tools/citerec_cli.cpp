// citerec command-line interface: corpus embedding, index construction,
// recommendation, rolling evaluation, HTTP serving, keyword extraction, and
// synthetic benchmark generation.
//
// Exit codes: 0 success, 2 configuration/input error, 3 embedding-provider
// error, 4 I/O error.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "citerec/cache.hpp"
#include "citerec/corpus.hpp"
#include "citerec/date.hpp"
#include "citerec/embedding.hpp"
#include "citerec/error.hpp"
#include "citerec/hnsw.hpp"
#include "citerec/manifest.hpp"
#include "citerec/metrics.hpp"
#include "citerec/protocol.hpp"
#include "citerec/recommender.hpp"
#include "citerec/service.hpp"
#include "citerec/synth.hpp"
#include "citerec/textrank.hpp"
#include "citerec/tokenize.hpp"
#include "citerec/tfidf.hpp"
#include "citerec/util.hpp"

namespace {

using namespace citerec;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Configuration resolution: CLI flag > environment > config file > default.
// The config file is JSON ({"flag-name": value, ...}), named by --config or
// the ENGINE_CONFIG environment variable. Every resolved value and its source
// is recorded in the run manifest.

std::string env_name_for(const std::string& key) {
    std::string name = "ENGINE_";
    for (char c : key) name.push_back(c == '-' ? '_' : static_cast<char>(std::toupper(c)));
    return name;
}

class Resolver {
  public:
    Resolver(const std::string& config_flag, bool config_flag_given, RunManifest& manifest)
        : manifest_(manifest) {
        std::string path = config_flag;
        std::string source = "flag";
        if (!config_flag_given) {
            const char* env = std::getenv("ENGINE_CONFIG");
            path = env ? env : "";
            source = "env";
        }
        if (path.empty()) return;
        if (!fs::exists(path)) {
            if (config_flag_given) throw ConfigError("config file not found: " + path);
            throw ConfigError("ENGINE_CONFIG points to a missing file: " + path);
        }
        const std::string text = read_file_bytes(path);
        file_cfg_ = nlohmann::json::parse(text, nullptr, false);
        if (file_cfg_.is_discarded() || !file_cfg_.is_object())
            throw ConfigError("config file must hold a JSON object: " + path);
        manifest_.add_config("config", path, source);
        manifest_.add_input(path);
    }

    std::string str(const CLI::Option* opt, const std::string& cli_value, const std::string& key,
                    const std::string& def) {
        auto [value, source] = raw(opt, cli_value, key, def);
        manifest_.add_config(key, value, source);
        return value;
    }

    std::int64_t i64(const CLI::Option* opt, std::int64_t cli_value, const std::string& key,
                     std::int64_t def) {
        auto [value, source] = raw(opt, std::to_string(cli_value), key, std::to_string(def));
        manifest_.add_config(key, value, source);
        try {
            return std::stoll(value);
        } catch (const std::exception&) {
            throw ConfigError("setting \"" + key + "\" must be an integer, got \"" + value + "\"");
        }
    }

    std::uint64_t u64(const CLI::Option* opt, std::uint64_t cli_value, const std::string& key,
                      std::uint64_t def) {
        auto [value, source] = raw(opt, std::to_string(cli_value), key, std::to_string(def));
        manifest_.add_config(key, value, source);
        try {
            return std::stoull(value);
        } catch (const std::exception&) {
            throw ConfigError("setting \"" + key + "\" must be a non-negative integer, got \"" +
                              value + "\"");
        }
    }

    double f64(const CLI::Option* opt, double cli_value, const std::string& key, double def) {
        auto [value, source] =
            raw(opt, format_double(cli_value), key, format_double(def));
        manifest_.add_config(key, value, source);
        try {
            return std::stod(value);
        } catch (const std::exception&) {
            throw ConfigError("setting \"" + key + "\" must be a number, got \"" + value + "\"");
        }
    }

    Date date(const CLI::Option* opt, const std::string& cli_value, const std::string& key,
              const std::string& def) {
        const std::string value = str(opt, cli_value, key, def);
        const auto parsed = Date::parse(value);
        if (!parsed)
            throw ConfigError("setting \"" + key + "\" must be a YYYY-MM-DD date, got \"" + value +
                              "\"");
        return *parsed;
    }

    /// Secret lookup: environment wins, then the config file; never a flag,
    /// and the manifest records only whether it was set.
    std::string secret(const std::string& key) {
        std::string value;
        std::string source = "default";
        if (const char* env = std::getenv(env_name_for(key).c_str())) {
            value = env;
            source = "env";
        } else if (file_cfg_.contains(key) && file_cfg_[key].is_string()) {
            value = file_cfg_[key].get<std::string>();
            source = "file";
        }
        manifest_.add_config(key, value.empty() ? "<unset>" : "<set>", source);
        return value;
    }

  private:
    static std::string format_double(double v) {
        std::string s = std::to_string(v);
        return s;
    }

    std::pair<std::string, std::string> raw(const CLI::Option* opt, const std::string& cli_value,
                                            const std::string& key, const std::string& def) {
        if (opt != nullptr && opt->count() > 0) return {cli_value, "flag"};
        if (const char* env = std::getenv(env_name_for(key).c_str())) return {env, "env"};
        if (file_cfg_.contains(key)) {
            const auto& v = file_cfg_[key];
            return {v.is_string() ? v.get<std::string>() : v.dump(), "file"};
        }
        return {def, "default"};
    }

    nlohmann::json file_cfg_ = nlohmann::json::object();
    RunManifest& manifest_;
};

// ---------------------------------------------------------------------------
// Shared flag bundles.

struct ProviderFlags {
    std::string provider;  // hash | tfidf | remote
    std::int64_t dim = 0;  // 0 → provider default (hash 128, tfidf 10000, remote 3072)
    std::uint64_t seed = 1;
    std::string tokenizer = kDefaultTokenizer;
    std::string endpoint;
    std::string model;
    std::int64_t batch_size = 0;
    std::int64_t max_retries = 0;
    double backoff = 1.0;
    double timeout = 60.0;

    CLI::Option* provider_opt = nullptr;
    CLI::Option* dim_opt = nullptr;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* tokenizer_opt = nullptr;
    CLI::Option* endpoint_opt = nullptr;
    CLI::Option* model_opt = nullptr;
    CLI::Option* batch_opt = nullptr;
    CLI::Option* retries_opt = nullptr;
    CLI::Option* backoff_opt = nullptr;
    CLI::Option* timeout_opt = nullptr;

    void attach(CLI::App* cmd, bool required) {
        provider_opt = cmd->add_option("--provider", provider,
                                       "Embedding provider: hash, tfidf, or remote");
        if (required) provider_opt->required();
        dim_opt = cmd->add_option("--dim", dim,
                                  "Vector dimension (tfidf: vocabulary size); 0 = provider default");
        seed_opt = cmd->add_option("--seed", seed, "Hash-provider seed");
        tokenizer_opt =
            cmd->add_option("--tokenizer", tokenizer, "Tokenizer: unicode or cjk-bigram");
        endpoint_opt = cmd->add_option("--embed-endpoint", endpoint,
                                       "Remote embeddings API base URL");
        model_opt = cmd->add_option("--embed-model", model, "Remote embeddings model name");
        batch_opt = cmd->add_option("--embed-batch-size", batch_size,
                                    "Maximum texts per remote request");
        retries_opt = cmd->add_option("--embed-max-retries", max_retries,
                                      "Attempts for transient remote failures");
        backoff_opt = cmd->add_option("--embed-backoff", backoff,
                                      "Base seconds for exponential retry backoff");
        timeout_opt = cmd->add_option("--embed-timeout", timeout, "Remote request timeout seconds");
    }

    /// Resolves all provider settings and builds the provider. `corpus` is
    /// required for tfidf (the model is fitted on it). Empty `provider`
    /// resolves to "" → returns nullptr (commands where it is optional).
    std::shared_ptr<EmbeddingProvider> make(Resolver& r, const CorpusStore* corpus) const {
        const std::string kind = r.str(provider_opt, provider, "provider", "");
        if (kind.empty()) return nullptr;
        const std::int64_t want_dim = r.i64(dim_opt, dim, "dim", 0);
        if (kind == "hash") {
            const std::uint64_t s = r.u64(seed_opt, seed, "seed", 1);
            return std::make_shared<HashProvider>(want_dim > 0 ? want_dim : 128, s);
        }
        if (kind == "tfidf") {
            if (corpus == nullptr)
                throw ConfigError("tfidf provider needs --corpus to fit its vocabulary");
            const std::string tok = r.str(tokenizer_opt, tokenizer, "tokenizer", kDefaultTokenizer);
            TfIdfModel model_ =
                tfidf_fit(*corpus, want_dim > 0 ? static_cast<std::size_t>(want_dim) : 10000, tok);
            return std::make_shared<TfIdfProvider>(std::move(model_));
        }
        if (kind == "remote") {
            RemoteProviderConfig cfg;
            cfg.endpoint = r.str(endpoint_opt, endpoint, "embed-endpoint", cfg.endpoint);
            cfg.model = r.str(model_opt, model, "embed-model", cfg.model);
            if (want_dim > 0) cfg.dim = static_cast<std::size_t>(want_dim);
            cfg.batch_size = static_cast<std::size_t>(r.i64(
                batch_opt, batch_size, "embed-batch-size", static_cast<std::int64_t>(cfg.batch_size)));
            cfg.max_retries =
                static_cast<int>(r.i64(retries_opt, max_retries, "embed-max-retries", cfg.max_retries));
            cfg.backoff_base_seconds =
                r.f64(backoff_opt, backoff, "embed-backoff", cfg.backoff_base_seconds);
            cfg.timeout_seconds = r.f64(timeout_opt, timeout, "embed-timeout", cfg.timeout_seconds);
            cfg.api_key = r.secret("embed-api-key");
            if (cfg.api_key.empty())
                throw ConfigError("remote embedding provider needs a credential: set " +
                                  std::string(kEmbedApiKeyEnv));
            return std::make_shared<RemoteProvider>(std::move(cfg));
        }
        throw ConfigError("unknown provider \"" + kind + "\" (expected hash, tfidf, or remote)");
    }
};

struct IndexFlags {
    std::int64_t M = 48;
    std::int64_t M_max0 = 0;
    std::int64_t ef_construction = 100;
    std::int64_t ef_search = 2000;
    double level_mult = 0.0;
    std::uint64_t seed = 0xc17e5eedULL;

    CLI::Option* m_opt = nullptr;
    CLI::Option* mmax0_opt = nullptr;
    CLI::Option* efc_opt = nullptr;
    CLI::Option* efs_opt = nullptr;
    CLI::Option* mult_opt = nullptr;
    CLI::Option* seed_opt = nullptr;

    void attach(CLI::App* cmd) {
        m_opt = cmd->add_option("--m", M, "Max neighbors per node on layers >= 1");
        mmax0_opt = cmd->add_option("--m-max0", M_max0, "Max neighbors on layer 0 (0 = 2*m)");
        efc_opt = cmd->add_option("--ef-construction", ef_construction,
                                  "Candidate list width during insertion");
        efs_opt = cmd->add_option("--ef-search", ef_search, "Default candidate list width at query");
        mult_opt = cmd->add_option("--level-mult", level_mult,
                                   "Level multiplier m_L (0 = 1/ln(m))");
        seed_opt = cmd->add_option("--index-seed", seed, "Level-sampler seed");
    }

    HnswParams make(Resolver& r) const {
        HnswParams p;
        p.M = static_cast<int>(r.i64(m_opt, M, "m", 48));
        p.M_max0 = static_cast<int>(r.i64(mmax0_opt, M_max0, "m-max0", 0));
        p.ef_construction = static_cast<int>(r.i64(efc_opt, ef_construction, "ef-construction", 100));
        p.ef_search = static_cast<int>(r.i64(efs_opt, ef_search, "ef-search", 2000));
        p.level_multiplier = r.f64(mult_opt, level_mult, "level-mult", 0.0);
        p.rng_seed = r.u64(seed_opt, seed, "index-seed", 0xc17e5eedULL);
        p.validate();
        return p;
    }
};

// ---------------------------------------------------------------------------
// Helpers.

fs::path default_manifest_path(const fs::path& primary_output) {
    return fs::path(primary_output.string() + ".manifest.json");
}

VectorMap vectors_for(const EmbeddingCache& cache, const CorpusStore& corpus) {
    VectorMap out;
    out.reserve(corpus.size());
    for (const PatentRecord* rec : corpus.records_in_date_order()) {
        const EmbeddingVector* v = cache.find(rec->pub_number);
        if (v == nullptr)
            throw ConfigError("cache has no vector for \"" + rec->pub_number +
                              "\"; run the embed command first");
        out.emplace(rec->pub_number, *v);
    }
    return out;
}

HnswIndex build_index_over(const CorpusStore& corpus, const VectorMap& vectors,
                           const HnswParams& params, const Date* before) {
    HnswIndex index(params);
    for (const PatentRecord* rec : corpus.records_in_date_order()) {
        if (before != nullptr && !(rec->filing_date < *before)) continue;
        index.insert(rec->pub_number, vectors.at(rec->pub_number));
    }
    return index;
}

std::atomic<bool> g_shutdown{false};

void on_signal(int) { g_shutdown.store(true); }

// ---------------------------------------------------------------------------
// Subcommands.

struct EmbedArgs {
    std::string corpus_path;
    std::string cache_path;
    std::string manifest_path;
    std::string config;
    CLI::Option* config_opt = nullptr;
    ProviderFlags provider;
};

int run_embed(const EmbedArgs& a) {
    RunManifest manifest;
    manifest.command = "embed";
    manifest.started_at = iso8601_utc_now();
    Resolver r(a.config, a.config_opt->count() > 0, manifest);

    const CorpusStore corpus = load_corpus(a.corpus_path);
    manifest.add_input(a.corpus_path);
    auto provider = a.provider.make(r, &corpus);
    if (!provider) throw ConfigError("embed needs --provider (hash, tfidf, or remote)");

    EmbeddingCache cache = EmbeddingCache::open(a.cache_path, provider->name(), provider->dim());
    const std::size_t before = cache.size();
    cache_get_or_embed(cache, *provider, corpus.records_in_date_order());

    manifest.add_output(a.cache_path);
    manifest.finished_at = iso8601_utc_now();
    const fs::path mpath =
        a.manifest_path.empty() ? default_manifest_path(a.cache_path) : fs::path(a.manifest_path);
    manifest.write(mpath);

    std::cout << "embedded " << corpus.size() << " records with " << provider->name() << " ("
              << before << " already cached, " << (cache.size() - before) << " new)\n"
              << "cache: " << a.cache_path << "\nmanifest: " << mpath.string() << "\n";
    return 0;
}

struct BuildIndexArgs {
    std::string corpus_path;
    std::string cache_path;
    std::string out_path;
    std::string split_date;
    std::string manifest_path;
    std::string config;
    CLI::Option* config_opt = nullptr;
    CLI::Option* split_opt = nullptr;
    IndexFlags index;
};

int run_build_index(const BuildIndexArgs& a) {
    RunManifest manifest;
    manifest.command = "build-index";
    manifest.started_at = iso8601_utc_now();
    Resolver r(a.config, a.config_opt->count() > 0, manifest);

    const HnswParams params = a.index.make(r);
    const std::string split_str = r.str(a.split_opt, a.split_date, "split-date", "");

    const CorpusStore corpus = load_corpus(a.corpus_path);
    manifest.add_input(a.corpus_path);
    const EmbeddingCache cache = EmbeddingCache::open_existing(a.cache_path);
    manifest.add_input(a.cache_path);
    const VectorMap vectors = vectors_for(cache, corpus);

    Date split{};
    const Date* before = nullptr;
    if (!split_str.empty()) {
        split = Date::parse_or_throw(split_str);
        before = &split;
    }
    HnswIndex index = build_index_over(corpus, vectors, params, before);
    if (index.empty())
        throw ConfigError("empty index: no records filed before " + split_str);
    index.save(a.out_path);

    manifest.add_output(a.out_path);
    manifest.finished_at = iso8601_utc_now();
    const fs::path mpath =
        a.manifest_path.empty() ? default_manifest_path(a.out_path) : fs::path(a.manifest_path);
    manifest.write(mpath);

    std::cout << "indexed " << index.size() << " nodes (dim " << index.dim() << ", max layer "
              << index.max_layer() << ")\nsnapshot: " << a.out_path << "\nmanifest: "
              << mpath.string() << "\n";
    return 0;
}

struct RecommendArgs {
    std::string snapshot_path;
    std::string cache_path;
    std::string corpus_path;
    std::vector<std::string> query_ids;
    std::string from;
    std::string to;
    std::int64_t pool_size = 1000;
    std::int64_t k = 100;
    std::int64_t ef_search = 0;
    std::string out_path;
    std::string manifest_path;
    std::string config;
    CLI::Option* config_opt = nullptr;
    CLI::Option* pool_opt = nullptr;
    CLI::Option* k_opt = nullptr;
    CLI::Option* ef_opt = nullptr;
};

int run_recommend(const RecommendArgs& a) {
    RunManifest manifest;
    manifest.command = "recommend";
    manifest.started_at = iso8601_utc_now();
    Resolver r(a.config, a.config_opt->count() > 0, manifest);

    PipelineConfig pipeline;
    pipeline.K = static_cast<int>(r.i64(a.pool_opt, a.pool_size, "pool-size", 1000));
    const int k = static_cast<int>(r.i64(a.k_opt, a.k, "k", 100));
    pipeline.k_cutoffs = {k};
    pipeline.ef_search = static_cast<int>(r.i64(a.ef_opt, a.ef_search, "ef-search", 0));
    pipeline.validate();

    const CorpusStore corpus = load_corpus(a.corpus_path);
    manifest.add_input(a.corpus_path);
    const HnswIndex index = HnswIndex::load(a.snapshot_path);
    manifest.add_input(a.snapshot_path);
    const EmbeddingCache cache = EmbeddingCache::open_existing(a.cache_path);
    manifest.add_input(a.cache_path);
    const VectorMap vectors = cache.to_vector_map();

    // Queries: explicit ids in the given order, or a date range in
    // (date, id) order. Exactly one selection method.
    std::vector<std::string> ids = a.query_ids;
    const bool has_range = !a.from.empty() || !a.to.empty();
    if (ids.empty() == !has_range)
        throw ConfigError("select queries with --query-id or with --from/--to (not both)");
    if (has_range) {
        if (a.from.empty() || a.to.empty())
            throw ConfigError("--from and --to must be given together");
        const Date from = Date::parse_or_throw(a.from);
        const Date to = Date::parse_or_throw(a.to);
        for (auto& [date, records] : queries_by_date(corpus, from, to)) {
            std::sort(records.begin(), records.end(), [](const auto* x, const auto* y) {
                return x->pub_number < y->pub_number;
            });
            for (const PatentRecord* rec : records) ids.push_back(rec->pub_number);
        }
    }

    std::vector<RecommendationList> results;
    results.reserve(ids.size());
    for (const std::string& id : ids) {
        const PatentRecord& rec = corpus.at(id);  // UnknownIdError → exit 2
        const auto vit = vectors.find(id);
        if (vit == vectors.end())
            throw ConfigError("cache has no vector for query \"" + id + "\"");
        results.push_back(recommend(index, vectors, rec, vit->second, pipeline));
    }

    if (a.out_path.empty()) {
        for (const auto& rec : results) std::cout << recommendation_jsonl_line(rec) << "\n";
    } else {
        write_recommendations_jsonl(results, a.out_path);
        manifest.add_output(a.out_path);
        manifest.finished_at = iso8601_utc_now();
        const fs::path mpath = a.manifest_path.empty() ? default_manifest_path(a.out_path)
                                                       : fs::path(a.manifest_path);
        manifest.write(mpath);
        std::cout << "wrote " << results.size() << " recommendation lists to " << a.out_path
                  << "\nmanifest: " << mpath.string() << "\n";
    }
    return 0;
}

struct EvalArgs {
    std::string corpus_path;
    std::string cache_path;
    std::string mode;
    std::string split_date;
    std::string query_from;
    std::string query_to;
    std::string cutoffs = "10,50,100,200";
    std::int64_t pool_size = 1000;
    std::int64_t threads = 1;
    std::string out_dir;
    std::string config;
    CLI::Option* config_opt = nullptr;
    CLI::Option* mode_opt = nullptr;
    CLI::Option* split_opt = nullptr;
    CLI::Option* from_opt = nullptr;
    CLI::Option* to_opt = nullptr;
    CLI::Option* cutoffs_opt = nullptr;
    CLI::Option* pool_opt = nullptr;
    CLI::Option* threads_opt = nullptr;
    IndexFlags index;
};

std::vector<int> parse_cutoffs(const std::string& csv) {
    std::vector<int> out;
    std::size_t start = 0;
    while (start <= csv.size()) {
        const std::size_t comma = csv.find(',', start);
        const std::string piece = csv.substr(start, comma == std::string::npos ? csv.size() - start
                                                                               : comma - start);
        if (!piece.empty()) {
            try {
                out.push_back(std::stoi(piece));
            } catch (const std::exception&) {
                throw ConfigError("cutoffs must be a comma-separated list of integers, got \"" +
                                  csv + "\"");
            }
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (out.empty()) throw ConfigError("cutoffs must name at least one k");
    return out;
}

int run_eval(const EvalArgs& a) {
    RunManifest manifest;
    manifest.command = "eval";
    manifest.started_at = iso8601_utc_now();
    Resolver r(a.config, a.config_opt->count() > 0, manifest);

    ProtocolConfig cfg;
    cfg.mode = parse_protocol_mode(r.str(a.mode_opt, a.mode, "mode", ""));
    cfg.split_date = r.date(a.split_opt, a.split_date, "split-date", "");
    cfg.query_from = r.date(a.from_opt, a.query_from, "query-from", "");
    cfg.query_to = r.date(a.to_opt, a.query_to, "query-to", "");
    cfg.pipeline.K = static_cast<int>(r.i64(a.pool_opt, a.pool_size, "pool-size", 1000));
    cfg.pipeline.k_cutoffs = parse_cutoffs(r.str(a.cutoffs_opt, a.cutoffs, "cutoffs", a.cutoffs));
    cfg.pipeline.ef_search = 0;  // query beam = the index-level --ef-search
    cfg.query_threads = static_cast<unsigned>(r.i64(a.threads_opt, a.threads, "threads", 1));
    cfg.hnsw = a.index.make(r);
    cfg.validate();
    cfg.pipeline.validate();

    const CorpusStore corpus = load_corpus(a.corpus_path);
    manifest.add_input(a.corpus_path);
    const EmbeddingCache cache = EmbeddingCache::open_existing(a.cache_path);
    manifest.add_input(a.cache_path);
    const VectorMap vectors = vectors_for(cache, corpus);

    const ProtocolResult result = run_protocol(corpus, vectors, cfg);

    fs::create_directories(a.out_dir);
    const fs::path report_path = fs::path(a.out_dir) / "report.json";
    const fs::path runlog_path = fs::path(a.out_dir) / "runlog.csv";
    const fs::path row_path = fs::path(a.out_dir) / "summary_row.csv";
    write_file_atomic(report_path, result.report.to_json());
    write_file_atomic(runlog_path, result.log.to_csv());
    write_file_atomic(row_path, result.report.csv_header() + result.report.to_csv_row(
                                    manifest.run_id(), protocol_mode_name(cfg.mode)));
    manifest.add_output(report_path);
    manifest.add_output(runlog_path);
    manifest.add_output(row_path);
    manifest.finished_at = iso8601_utc_now();
    const fs::path mpath = fs::path(a.out_dir) / "manifest.json";
    manifest.write(mpath);

    std::cout << protocol_mode_name(cfg.mode) << " evaluation over " << result.report.n_queries
              << " queries\n"
              << "  MRR  " << result.report.mrr << "\n  nDCG " << result.report.ndcg << "\n";
    for (const auto& [k, v] : result.report.rec_at) std::cout << "  Rec@" << k << " " << v << "\n";
    std::cout << "  initial build  " << result.log.initial_build_seconds << " s\n"
              << "  retrieval      " << result.log.total_retrieval_seconds() << " s\n"
              << "  maintenance    " << result.log.total_maintenance_seconds() << " s\n"
              << "report: " << report_path.string() << "\nrunlog: " << runlog_path.string()
              << "\nmanifest: " << mpath.string() << "\n";
    return 0;
}

struct ServeArgs {
    std::string snapshot_path;
    std::string snapshot_out;
    std::string corpus_path;
    std::string host = "127.0.0.1";
    std::int64_t port = 8080;
    std::int64_t default_k = 10;
    std::int64_t ef_search = 0;
    std::string config;
    CLI::Option* config_opt = nullptr;
    CLI::Option* host_opt = nullptr;
    CLI::Option* port_opt = nullptr;
    CLI::Option* k_opt = nullptr;
    CLI::Option* ef_opt = nullptr;
    ProviderFlags provider;
};

int run_serve(const ServeArgs& a) {
    RunManifest manifest;
    manifest.command = "serve";
    manifest.started_at = iso8601_utc_now();
    Resolver r(a.config, a.config_opt->count() > 0, manifest);

    ServiceConfig cfg;
    cfg.default_k = static_cast<int>(r.i64(a.k_opt, a.default_k, "default-k", 10));
    cfg.ef_search = static_cast<int>(r.i64(a.ef_opt, a.ef_search, "ef-search", 0));
    const std::string host = r.str(a.host_opt, a.host, "host", "127.0.0.1");
    const int port = static_cast<int>(r.i64(a.port_opt, a.port, "port", 8080));
    cfg.snapshot_path = a.snapshot_out.empty() ? a.snapshot_path : a.snapshot_out;

    HnswIndex index = HnswIndex::load(a.snapshot_path);
    manifest.add_input(a.snapshot_path);

    std::shared_ptr<EmbeddingProvider> provider;
    if (a.corpus_path.empty()) {
        provider = a.provider.make(r, nullptr);
    } else {
        const CorpusStore corpus = load_corpus(a.corpus_path);
        manifest.add_input(a.corpus_path);
        provider = a.provider.make(r, &corpus);
    }
    if (provider && index.dim() != 0 && provider->dim() != index.dim())
        throw ConfigError("provider dim " + std::to_string(provider->dim()) +
                          " does not match index dim " + std::to_string(index.dim()));

    const std::size_t count = index.size();
    RecommendService service(std::move(index), cfg, provider);
    HttpService http(service, host, port);
    http.start();
    std::cout << "serving " << count << " vectors on " << host << ":" << http.port()
              << " (POST /recommend, POST /insert, GET /stats)\n"
              << "shutdown persists a snapshot to " << cfg.snapshot_path.string() << "\n"
              << std::flush;

    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    while (!g_shutdown.load()) std::this_thread::sleep_for(std::chrono::milliseconds(100));

    std::cout << "shutting down...\n";
    http.stop();
    service.persist_snapshot();
    manifest.add_output(cfg.snapshot_path);
    manifest.finished_at = iso8601_utc_now();
    const fs::path mpath = default_manifest_path(cfg.snapshot_path);
    manifest.write(mpath);
    std::cout << "snapshot persisted (" << service.index().size() << " vectors)\nmanifest: "
              << mpath.string() << "\n";
    return 0;
}

struct KeywordsArgs {
    std::string corpus_path;
    std::string out_path;
    std::string tokenizer = kDefaultTokenizer;
    std::int64_t top_n = 10;
    std::int64_t window = 10;
    std::int64_t threads = 1;
    std::string manifest_path;
    std::string config;
    CLI::Option* config_opt = nullptr;
    CLI::Option* tokenizer_opt = nullptr;
    CLI::Option* top_opt = nullptr;
    CLI::Option* window_opt = nullptr;
    CLI::Option* threads_opt = nullptr;
};

int run_keywords(const KeywordsArgs& a) {
    RunManifest manifest;
    manifest.command = "keywords";
    manifest.started_at = iso8601_utc_now();
    Resolver r(a.config, a.config_opt->count() > 0, manifest);

    const std::string tok = r.str(a.tokenizer_opt, a.tokenizer, "tokenizer", kDefaultTokenizer);
    const int top_n = static_cast<int>(r.i64(a.top_opt, a.top_n, "top-n", 10));
    const int window = static_cast<int>(r.i64(a.window_opt, a.window, "window", 10));
    const unsigned threads = static_cast<unsigned>(r.i64(a.threads_opt, a.threads, "threads", 1));

    std::map<std::string, std::uint64_t> freq;
    std::size_t n_docs = 0;
    try {
        const CorpusStore corpus = load_corpus(a.corpus_path);
        n_docs = corpus.size();
        freq = corpus_keyword_frequencies(corpus, StopFilter::default_english(), tok, top_n,
                                          window, threads);
    } catch (const EmptyCorpusError&) {
        // An empty corpus yields an empty (header-only) table.
    }
    manifest.add_input(a.corpus_path);
    write_file_atomic(a.out_path, keyword_frequencies_csv(freq));

    manifest.add_output(a.out_path);
    manifest.finished_at = iso8601_utc_now();
    const fs::path mpath =
        a.manifest_path.empty() ? default_manifest_path(a.out_path) : fs::path(a.manifest_path);
    manifest.write(mpath);

    std::cout << "extracted " << freq.size() << " distinct keywords from " << n_docs
              << " records\ncsv: " << a.out_path << "\nmanifest: " << mpath.string() << "\n";
    return 0;
}

struct GenSynthArgs {
    std::string out_corpus;
    std::string out_cache;
    std::uint64_t seed = 42;
    std::int64_t dim = 32;
    std::int64_t clusters = 50;
    std::int64_t n_pre = 5000;
    std::int64_t n_stream = 2000;
    std::int64_t pre_dates = 100;
    std::int64_t stream_dates = 100;
    std::string split_date = "2024-01-01";
    std::int64_t cites_per_doc = 5;
    double in_range_fraction = 0.3;
    double noise = 0.25;
    std::string manifest_path;
    std::string config;
    CLI::Option* config_opt = nullptr;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* dim_opt = nullptr;
    CLI::Option* clusters_opt = nullptr;
    CLI::Option* pre_opt = nullptr;
    CLI::Option* stream_opt = nullptr;
    CLI::Option* pre_dates_opt = nullptr;
    CLI::Option* stream_dates_opt = nullptr;
    CLI::Option* split_opt = nullptr;
    CLI::Option* cites_opt = nullptr;
    CLI::Option* frac_opt = nullptr;
    CLI::Option* noise_opt = nullptr;
};

int run_gen_synth(const GenSynthArgs& a) {
    RunManifest manifest;
    manifest.command = "gen-synth";
    manifest.started_at = iso8601_utc_now();
    Resolver r(a.config, a.config_opt->count() > 0, manifest);

    SynthConfig cfg;
    cfg.seed = r.u64(a.seed_opt, a.seed, "synth-seed", 42);
    cfg.dim = static_cast<std::size_t>(r.i64(a.dim_opt, a.dim, "synth-dim", 32));
    cfg.clusters = static_cast<std::size_t>(r.i64(a.clusters_opt, a.clusters, "clusters", 50));
    cfg.n_pre = static_cast<std::size_t>(r.i64(a.pre_opt, a.n_pre, "n-pre", 5000));
    cfg.n_stream = static_cast<std::size_t>(r.i64(a.stream_opt, a.n_stream, "n-stream", 2000));
    cfg.pre_dates = static_cast<std::size_t>(r.i64(a.pre_dates_opt, a.pre_dates, "pre-dates", 100));
    cfg.stream_dates =
        static_cast<std::size_t>(r.i64(a.stream_dates_opt, a.stream_dates, "stream-dates", 100));
    cfg.split_date = r.date(a.split_opt, a.split_date, "split-date", "2024-01-01");
    cfg.cites_per_doc =
        static_cast<std::size_t>(r.i64(a.cites_opt, a.cites_per_doc, "cites-per-doc", 5));
    cfg.in_range_fraction = r.f64(a.frac_opt, a.in_range_fraction, "in-range-fraction", 0.3);
    cfg.noise = r.f64(a.noise_opt, a.noise, "noise", 0.25);

    const SynthResult result = gen_synthetic(cfg);
    write_synthetic(result, a.out_corpus, a.out_cache);

    manifest.add_output(a.out_corpus);
    if (!a.out_cache.empty()) manifest.add_output(a.out_cache);
    manifest.finished_at = iso8601_utc_now();
    const fs::path mpath =
        a.manifest_path.empty() ? default_manifest_path(a.out_corpus) : fs::path(a.manifest_path);
    manifest.write(mpath);

    const ResolveResult resolved = resolve_citations(result.corpus);
    std::cout << "generated " << result.corpus.size() << " records (" << cfg.n_pre
              << " pre-split + " << cfg.n_stream << " stream), provider " << result.provider_name
              << "\nresolved citations: " << resolved.stats.citations_total << " total, "
              << resolved.stats.queries_with_ground_truth << " records with ground truth\n"
              << "corpus: " << a.out_corpus << "\nmanifest: " << mpath.string() << "\n";
    if (!a.out_cache.empty()) std::cout << "cache: " << a.out_cache << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"citerec: patent citation recommendation engine"};
    app.require_subcommand(1);

    // embed ------------------------------------------------------------
    EmbedArgs embed_args;
    CLI::App* embed = app.add_subcommand("embed", "Embed corpus abstracts into a vector cache");
    embed_args.config_opt =
        embed->add_option("--config", embed_args.config, "JSON config file (env: ENGINE_CONFIG)");
    embed->add_option("--corpus", embed_args.corpus_path, "Corpus JSONL path")->required();
    embed->add_option("--cache", embed_args.cache_path, "Embedding cache path (created/extended)")
        ->required();
    embed->add_option("--manifest", embed_args.manifest_path, "Manifest path (default <cache>.manifest.json)");
    embed_args.provider.attach(embed, /*required=*/false);

    // build-index --------------------------------------------------------
    BuildIndexArgs build_args;
    CLI::App* build = app.add_subcommand("build-index", "Build an ANN index from cached vectors");
    build_args.config_opt =
        build->add_option("--config", build_args.config, "JSON config file (env: ENGINE_CONFIG)");
    build->add_option("--corpus", build_args.corpus_path, "Corpus JSONL path")->required();
    build->add_option("--cache", build_args.cache_path, "Embedding cache path")->required();
    build->add_option("--out", build_args.out_path, "Snapshot output path")->required();
    build_args.split_opt = build->add_option(
        "--split-date", build_args.split_date,
        "Index only records filed strictly before this date (default: everything)");
    build->add_option("--manifest", build_args.manifest_path,
                      "Manifest path (default <out>.manifest.json)");
    build_args.index.attach(build);

    // recommend ----------------------------------------------------------
    RecommendArgs rec_args;
    CLI::App* rec = app.add_subcommand("recommend", "Recommend citations for queries");
    rec_args.config_opt =
        rec->add_option("--config", rec_args.config, "JSON config file (env: ENGINE_CONFIG)");
    rec->add_option("--snapshot", rec_args.snapshot_path, "Index snapshot path")->required();
    rec->add_option("--cache", rec_args.cache_path, "Embedding cache path")->required();
    rec->add_option("--corpus", rec_args.corpus_path, "Corpus JSONL path")->required();
    rec->add_option("--query-id", rec_args.query_ids, "Query record id (repeatable)");
    rec->add_option("--from", rec_args.from, "Query date range start (YYYY-MM-DD)");
    rec->add_option("--to", rec_args.to, "Query date range end (inclusive)");
    rec_args.pool_opt =
        rec->add_option("--pool-size", rec_args.pool_size, "Retrieval pool size K");
    rec_args.k_opt = rec->add_option("--k", rec_args.k, "Recommendations per query");
    rec_args.ef_opt =
        rec->add_option("--ef-search", rec_args.ef_search, "Query beam width (0 = snapshot default)");
    rec->add_option("--out", rec_args.out_path, "Output JSONL path (default: stdout)");
    rec->add_option("--manifest", rec_args.manifest_path,
                    "Manifest path (default <out>.manifest.json)");

    // eval -----------------------------------------------------------------
    EvalArgs eval_args;
    CLI::App* eval = app.add_subcommand("eval", "Run the rolling-update evaluation protocol");
    eval_args.config_opt =
        eval->add_option("--config", eval_args.config, "JSON config file (env: ENGINE_CONFIG)");
    eval->add_option("--corpus", eval_args.corpus_path, "Corpus JSONL path")->required();
    eval->add_option("--cache", eval_args.cache_path, "Embedding cache path")->required();
    eval_args.mode_opt =
        eval->add_option("--mode", eval_args.mode, "static, incremental, or rebuild")->required();
    eval_args.split_opt =
        eval->add_option("--split-date", eval_args.split_date, "Pre-split boundary date")
            ->required();
    eval_args.from_opt =
        eval->add_option("--query-from", eval_args.query_from, "First query date")->required();
    eval_args.to_opt =
        eval->add_option("--query-to", eval_args.query_to, "Last query date (inclusive)")
            ->required();
    eval_args.cutoffs_opt =
        eval->add_option("--cutoffs", eval_args.cutoffs, "Rec@k cutoffs, comma-separated");
    eval_args.pool_opt =
        eval->add_option("--pool-size", eval_args.pool_size, "Retrieval pool size K");
    eval_args.threads_opt =
        eval->add_option("--threads", eval_args.threads, "Query-phase threads (0 = hardware)");
    eval->add_option("--out-dir", eval_args.out_dir, "Output directory")->required();
    eval_args.index.attach(eval);

    // serve ------------------------------------------------------------------
    ServeArgs serve_args;
    CLI::App* serve = app.add_subcommand("serve", "Serve recommendations over HTTP");
    serve_args.config_opt =
        serve->add_option("--config", serve_args.config, "JSON config file (env: ENGINE_CONFIG)");
    serve->add_option("--snapshot", serve_args.snapshot_path, "Index snapshot to load")->required();
    serve->add_option("--snapshot-out", serve_args.snapshot_out,
                      "Shutdown snapshot path (default: overwrite --snapshot)");
    serve->add_option("--corpus", serve_args.corpus_path,
                      "Corpus JSONL (needed only by --provider tfidf)");
    serve_args.host_opt = serve->add_option("--host", serve_args.host, "Bind address");
    serve_args.port_opt = serve->add_option("--port", serve_args.port, "Port (0 = any free port)");
    serve_args.k_opt =
        serve->add_option("--default-k", serve_args.default_k, "Default k for /recommend");
    serve_args.ef_opt =
        serve->add_option("--ef-search", serve_args.ef_search, "Query beam width (0 = snapshot default)");
    serve_args.provider.attach(serve, /*required=*/false);

    // keywords ------------------------------------------------------------
    KeywordsArgs kw_args;
    CLI::App* keywords = app.add_subcommand("keywords", "Extract corpus keyword frequencies");
    kw_args.config_opt =
        keywords->add_option("--config", kw_args.config, "JSON config file (env: ENGINE_CONFIG)");
    keywords->add_option("--corpus", kw_args.corpus_path, "Corpus JSONL path")->required();
    keywords->add_option("--out", kw_args.out_path, "Output CSV path")->required();
    kw_args.tokenizer_opt =
        keywords->add_option("--tokenizer", kw_args.tokenizer, "unicode or cjk-bigram");
    kw_args.top_opt = keywords->add_option("--top-n", kw_args.top_n, "Keywords per document");
    kw_args.window_opt = keywords->add_option("--window", kw_args.window, "Co-occurrence window");
    kw_args.threads_opt = keywords->add_option("--threads", kw_args.threads, "Worker threads");
    keywords->add_option("--manifest", kw_args.manifest_path,
                         "Manifest path (default <out>.manifest.json)");

    // gen-synth ------------------------------------------------------------
    GenSynthArgs synth_args;
    CLI::App* synth = app.add_subcommand("gen-synth", "Generate a seeded synthetic benchmark");
    synth_args.config_opt =
        synth->add_option("--config", synth_args.config, "JSON config file (env: ENGINE_CONFIG)");
    synth->add_option("--out-corpus", synth_args.out_corpus, "Corpus JSONL output path")
        ->required();
    synth->add_option("--out-cache", synth_args.out_cache,
                      "Embedding cache output path (optional)");
    synth_args.seed_opt = synth->add_option("--seed", synth_args.seed, "Generator seed");
    synth_args.dim_opt = synth->add_option("--dim", synth_args.dim, "Vector dimension");
    synth_args.clusters_opt = synth->add_option("--clusters", synth_args.clusters, "Topic clusters");
    synth_args.pre_opt = synth->add_option("--n-pre", synth_args.n_pre, "Pre-split records");
    synth_args.stream_opt = synth->add_option("--n-stream", synth_args.n_stream, "Stream records");
    synth_args.pre_dates_opt =
        synth->add_option("--pre-dates", synth_args.pre_dates, "Distinct pre-split filing dates");
    synth_args.stream_dates_opt =
        synth->add_option("--stream-dates", synth_args.stream_dates, "Distinct stream filing dates");
    synth_args.split_opt = synth->add_option("--split-date", synth_args.split_date,
                                             "First stream date (YYYY-MM-DD)");
    synth_args.cites_opt =
        synth->add_option("--cites-per-doc", synth_args.cites_per_doc, "Planted citations per record");
    synth_args.frac_opt = synth->add_option("--in-range-fraction", synth_args.in_range_fraction,
                                            "Share of stream citations pointing into the stream");
    synth_args.noise_opt = synth->add_option("--noise", synth_args.noise, "Within-cluster noise");
    synth->add_option("--manifest", synth_args.manifest_path,
                      "Manifest path (default <out-corpus>.manifest.json)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 2;
    }

    try {
        if (app.got_subcommand(embed)) return run_embed(embed_args);
        if (app.got_subcommand(build)) return run_build_index(build_args);
        if (app.got_subcommand(rec)) return run_recommend(rec_args);
        if (app.got_subcommand(eval)) return run_eval(eval_args);
        if (app.got_subcommand(serve)) return run_serve(serve_args);
        if (app.got_subcommand(keywords)) return run_keywords(kw_args);
        if (app.got_subcommand(synth)) return run_gen_synth(synth_args);
    } catch (const ProviderError& e) {
        std::cerr << "provider error: " << e.what() << "\n";
        return 3;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 4;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
