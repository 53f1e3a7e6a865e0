#include <atomic>
#include <chrono>
#include <cstdlib>
#include <random>
#include <thread>

#include <json.hpp>

#include "citerec/embedding.hpp"
#include "citerec/error.hpp"
#include "http_all.hpp"

namespace citerec {

using nlohmann::json;

struct RemoteProvider::Counters {
    std::atomic<std::uint64_t> attempts{0};
};

RemoteProvider::RemoteProvider(RemoteProviderConfig config)
    : config_(std::move(config)), counters_(std::make_shared<Counters>()) {
    if (config_.dim == 0) throw ConfigError("remote provider dim must be positive");
    if (config_.batch_size == 0) throw ConfigError("remote batch size must be positive");
    if (config_.max_retries < 1) throw ConfigError("max retries must be >= 1");
}

std::string RemoteProvider::name() const {
    return "remote:" + config_.model + ":" + std::to_string(config_.dim);
}

std::uint64_t RemoteProvider::attempts_made() const {
    return counters_->attempts.load();
}

namespace {

struct SplitUrl {
    std::string host;  // scheme://authority, what httplib::Client wants
    std::string path;  // base path, no trailing slash
};

SplitUrl split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw ConfigError("endpoint must start with http:// or https://: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, ""};
    std::string path = url.substr(path_start);
    while (!path.empty() && path.back() == '/') path.pop_back();
    return {url.substr(0, path_start), path};
}

double jitter_seconds(double base) {
    thread_local std::mt19937_64 rng{std::random_device{}()};
    std::uniform_real_distribution<double> dist(0.0, base * 0.1);
    return dist(rng);
}

}  // namespace

std::vector<EmbeddingVector> RemoteProvider::embed_batch(
    const std::vector<std::string>& texts) {
    if (texts.empty()) throw ConfigError("embed_batch called with an empty batch");
    if (texts.size() > config_.batch_size)
        throw ConfigError("batch of " + std::to_string(texts.size()) +
                          " exceeds configured maximum " +
                          std::to_string(config_.batch_size));
    for (const auto& t : texts)
        if (t.empty()) throw ConfigError("embed_batch input contains an empty text");

    std::string api_key = config_.api_key;
    if (api_key.empty()) {
        const char* env = std::getenv(kEmbedApiKeyEnv);
        if (env) api_key = env;
    }
    if (api_key.empty())
        throw AuthError(std::string("no API credential: set ") + kEmbedApiKeyEnv);

    const SplitUrl url = split_url(config_.endpoint);

    json body;
    body["model"] = config_.model;
    body["input"] = texts;
    const std::string payload = body.dump();

    std::string last_error;
    bool saw_rate_limit = false;

    for (int attempt = 1; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 1) {
            const double delay = config_.backoff_base_seconds *
                                     static_cast<double>(1 << (attempt - 2)) +
                                 jitter_seconds(config_.backoff_base_seconds);
            std::this_thread::sleep_for(std::chrono::duration<double>(delay));
        }
        counters_->attempts.fetch_add(1);

        httplib::Client client(url.host);
        client.set_connection_timeout(std::chrono::duration<double>(config_.timeout_seconds));
        client.set_read_timeout(std::chrono::duration<double>(config_.timeout_seconds));
        client.set_bearer_token_auth(api_key);

        auto res = client.Post(url.path + "/embeddings", payload, "application/json");
        if (!res) {
            last_error = "transport failure: " + httplib::to_string(res.error());
            continue;  // transient: retry
        }
        if (res->status == 401 || res->status == 403)
            throw AuthError("provider rejected credential (HTTP " +
                            std::to_string(res->status) + ")");
        if (res->status == 429) {
            saw_rate_limit = true;
            last_error = "rate limited (HTTP 429)";
            continue;
        }
        if (res->status >= 500) {
            last_error = "server error (HTTP " + std::to_string(res->status) + ")";
            continue;
        }
        if (res->status != 200)
            throw TransportError("unexpected HTTP status " + std::to_string(res->status) +
                                 ": " + res->body);

        json reply = json::parse(res->body, nullptr, false);
        if (reply.is_discarded() || !reply.contains("data") || !reply["data"].is_array())
            throw TransportError("malformed provider response body");
        const auto& data = reply["data"];
        if (data.size() != texts.size())
            throw TransportError("provider returned " + std::to_string(data.size()) +
                                 " embeddings for " + std::to_string(texts.size()) +
                                 " inputs");

        std::vector<EmbeddingVector> out(texts.size());
        std::vector<bool> filled(texts.size(), false);
        for (const auto& item : data) {
            if (!item.contains("index") || !item.contains("embedding"))
                throw TransportError("provider response item missing index/embedding");
            const auto idx = item["index"].get<std::size_t>();
            if (idx >= texts.size() || filled[idx])
                throw TransportError("provider response has bad or duplicate index");
            std::vector<float> values = item["embedding"].get<std::vector<float>>();
            if (values.size() != config_.dim)
                throw ProviderDimMismatchError(
                    "provider returned dim " + std::to_string(values.size()) +
                    ", expected " + std::to_string(config_.dim));
            out[idx] = EmbeddingVector::from_raw(std::move(values));
            filled[idx] = true;
        }
        for (bool f : filled)
            if (!f) throw TransportError("provider response left an index unfilled");
        return out;
    }

    if (saw_rate_limit)
        throw RateLimitedError("rate limited after " + std::to_string(config_.max_retries) +
                               " attempts");
    throw TransportError("giving up after " + std::to_string(config_.max_retries) +
                         " attempts: " + last_error);
}

}  // namespace citerec
