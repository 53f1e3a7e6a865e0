#include "citerec/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <vector>

#include "citerec/cache.hpp"
#include "citerec/error.hpp"

namespace citerec {

void SynthConfig::validate() const {
    if (dim < 2) throw ConfigError("synth: dim must be >= 2");
    if (clusters == 0) throw ConfigError("synth: clusters must be >= 1");
    if (n_pre == 0) throw ConfigError("synth: n_pre must be >= 1");
    if (pre_dates == 0 || pre_dates > n_pre)
        throw ConfigError("synth: pre_dates must be in [1, n_pre]");
    if (n_stream > 0 && (stream_dates == 0 || stream_dates > n_stream))
        throw ConfigError("synth: stream_dates must be in [1, n_stream]");
    if (!split_date.valid()) throw ConfigError("synth: split_date is not a valid date");
    if (in_range_fraction < 0.0 || in_range_fraction > 1.0)
        throw ConfigError("synth: in_range_fraction must be in [0, 1]");
    if (!(noise > 0.0)) throw ConfigError("synth: noise must be > 0");
}

namespace {

constexpr std::size_t kVocabPerCluster = 40;

const char* const kFillerWords[] = {"method",    "system", "device", "apparatus",
                                    "described", "signal", "module", "process"};
constexpr std::size_t kFillerCount = sizeof(kFillerWords) / sizeof(kFillerWords[0]);

std::string synth_id(std::size_t ordinal) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "SYN%06zu", ordinal);
    return buf;
}

std::string cluster_term(std::size_t cluster, std::size_t term) {
    return "clu" + std::to_string(cluster) + "term" + std::to_string(term);
}

// Dated id lists per cluster, kept in ascending date order by construction.
struct ClusterPool {
    std::vector<std::string> ids;
    std::vector<Date> dates;

    // Number of entries filed strictly before `d`.
    std::size_t earlier_than(const Date& d) const {
        auto it = std::lower_bound(dates.begin(), dates.end(), d);
        return static_cast<std::size_t>(it - dates.begin());
    }

    void push(std::string id, const Date& d) {
        ids.push_back(std::move(id));
        dates.push_back(d);
    }
};

}  // namespace

SynthResult gen_synthetic(const SynthConfig& cfg) {
    cfg.validate();

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    // Cluster centers: random points on the unit sphere.
    std::vector<std::vector<double>> centers(cfg.clusters, std::vector<double>(cfg.dim));
    for (auto& center : centers) {
        double norm_sq = 0.0;
        for (auto& x : center) {
            x = gauss(rng);
            norm_sq += x * x;
        }
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (auto& x : center) x *= inv;
    }

    SynthResult out;
    out.provider_name = "synth:" + std::to_string(cfg.dim) + ":" + std::to_string(cfg.seed);

    std::vector<ClusterPool> pre_pools(cfg.clusters);
    std::vector<ClusterPool> stream_pools(cfg.clusters);

    std::uniform_int_distribution<std::size_t> pick_cluster(0, cfg.clusters - 1);
    std::uniform_int_distribution<std::size_t> pick_term(0, kVocabPerCluster - 1);
    std::uniform_int_distribution<std::size_t> pick_filler(0, kFillerCount - 1);
    std::uniform_int_distribution<std::size_t> extra_len(0, 30);

    const std::int64_t split_days = cfg.split_date.to_days();
    const std::size_t total = cfg.n_pre + cfg.n_stream;

    for (std::size_t i = 0; i < total; ++i) {
        const bool is_stream = i >= cfg.n_pre;

        Date filing{};
        if (is_stream) {
            const std::size_t j = i - cfg.n_pre;
            const std::size_t date_idx = j * cfg.stream_dates / cfg.n_stream;
            filing = Date::from_days(split_days + static_cast<std::int64_t>(date_idx));
        } else {
            const std::size_t date_idx = i * cfg.pre_dates / cfg.n_pre;
            const std::int64_t offset = static_cast<std::int64_t>(cfg.pre_dates - date_idx);
            filing = Date::from_days(split_days - offset);
        }

        const std::size_t cluster = pick_cluster(rng);

        // Vector: noisy copy of the cluster center, renormalized.
        std::vector<double> raw(cfg.dim);
        double norm_sq = 0.0;
        for (std::size_t d = 0; d < cfg.dim; ++d) {
            raw[d] = centers[cluster][d] + cfg.noise * gauss(rng);
            norm_sq += raw[d] * raw[d];
        }
        const double inv = 1.0 / std::sqrt(norm_sq);
        std::vector<float> vec(cfg.dim);
        for (std::size_t d = 0; d < cfg.dim; ++d)
            vec[d] = static_cast<float>(raw[d] * inv);

        // Abstract: token soup over the cluster vocabulary plus shared filler.
        const std::size_t n_tokens = 30 + extra_len(rng);
        std::string abstract;
        abstract.reserve(n_tokens * 12);
        for (std::size_t t = 0; t < n_tokens; ++t) {
            if (t != 0) abstract.push_back(' ');
            if (unit(rng) < 0.85)
                abstract += cluster_term(cluster, pick_term(rng));
            else
                abstract += kFillerWords[pick_filler(rng)];
        }

        const std::string id = synth_id(i);

        // Citations: same cluster, strictly earlier filing date. Stream
        // documents cite earlier stream documents with probability
        // in_range_fraction when any exist, otherwise pre-split documents.
        std::set<std::string> cited;
        const ClusterPool& pre_pool = pre_pools[cluster];
        const ClusterPool& stream_pool = stream_pools[cluster];
        const std::size_t n_pre_eligible = pre_pool.earlier_than(filing);
        const std::size_t n_in_eligible = is_stream ? stream_pool.earlier_than(filing) : 0;
        for (std::size_t c = 0; c < cfg.cites_per_doc; ++c) {
            const bool want_in_range = is_stream && unit(rng) < cfg.in_range_fraction;
            if (want_in_range && n_in_eligible > 0) {
                std::uniform_int_distribution<std::size_t> pick(0, n_in_eligible - 1);
                cited.insert(stream_pool.ids[pick(rng)]);
            } else if (n_pre_eligible > 0) {
                std::uniform_int_distribution<std::size_t> pick(0, n_pre_eligible - 1);
                cited.insert(pre_pool.ids[pick(rng)]);
            }
        }

        PatentRecord rec;
        rec.pub_number = id;
        rec.title = "Synthetic record " + std::to_string(i) + " cluster " + std::to_string(cluster);
        rec.abstract_text = std::move(abstract);
        rec.filing_date = filing;
        rec.ipc_main = std::string(1, "ABCDEFGH"[cluster % 8]) + "0" +
                       std::to_string(1 + cluster % 9) + "Z";
        rec.ipc_codes = {rec.ipc_main};
        rec.citations.assign(cited.begin(), cited.end());

        out.corpus.insert(std::move(rec));
        out.vectors.emplace(id, EmbeddingVector::from_raw(std::move(vec)));
        if (is_stream)
            stream_pools[cluster].push(id, filing);
        else
            pre_pools[cluster].push(id, filing);
    }

    return out;
}

void write_synthetic(const SynthResult& result, const std::filesystem::path& corpus_path,
                     const std::filesystem::path& cache_path) {
    write_corpus(result.corpus, corpus_path);
    if (cache_path.empty()) return;

    const std::size_t dim = result.vectors.begin()->second.dim();
    EmbeddingCache cache = EmbeddingCache::open(cache_path, result.provider_name, dim);
    std::vector<std::pair<std::string, EmbeddingVector>> entries;
    entries.reserve(result.vectors.size());
    for (const PatentRecord* rec : result.corpus.records_in_date_order())
        entries.emplace_back(rec->pub_number, result.vectors.at(rec->pub_number));
    cache.put_batch(entries);
}

}  // namespace citerec
