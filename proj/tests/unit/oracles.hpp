// Independent reference implementations the tests compare the library
// against. Everything here is written straightforwardly (quadratic scans,
// dense iteration, long-double accumulation) and shares no code with the
// library's own implementations.
#pragma once

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "citerec/embedding.hpp"

namespace testing_oracles {

// ---------------------------------------------------------------------------
// Vectors.

inline std::vector<float> random_unit_vector(std::mt19937_64& rng, std::size_t dim) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> raw(dim);
    double norm_sq = 0.0;
    for (auto& x : raw) {
        x = gauss(rng);
        norm_sq += x * x;
    }
    const double inv = 1.0 / std::sqrt(norm_sq);
    std::vector<float> out(dim);
    for (std::size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(raw[i] * inv);
    return out;
}

/// Cosine distance with the same pairing the library uses (1 - dot), but an
/// independent plain-loop dot product in long double.
inline double reference_distance(std::span<const float> a, std::span<const float> b) {
    long double acc = 0.0L;
    for (std::size_t i = 0; i < a.size(); ++i)
        acc += static_cast<long double>(a[i]) * static_cast<long double>(b[i]);
    return 1.0 - static_cast<double>(acc);
}

struct NamedVector {
    std::string id;
    citerec::EmbeddingVector vec;
};

/// Exhaustive top-k by ascending (cosine distance, id). Uses the library's
/// dot_product so that distance *values* agree bit-for-bit with the index
/// (the ordering logic is what this oracle independently exercises).
inline std::vector<std::string> brute_force_topk(const std::vector<NamedVector>& base,
                                                 const citerec::EmbeddingVector& q,
                                                 std::size_t k) {
    std::vector<std::pair<double, const std::string*>> scored;
    scored.reserve(base.size());
    for (const auto& item : base) {
        const double d = 1.0 - citerec::dot_product(q.values(), item.vec.values());
        scored.emplace_back(d, &item.id);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) {
        if (x.first != y.first) return x.first < y.first;
        return *x.second < *y.second;
    });
    if (scored.size() > k) scored.resize(k);
    std::vector<std::string> out;
    out.reserve(scored.size());
    for (const auto& [d, id] : scored) out.push_back(*id);
    return out;
}

// ---------------------------------------------------------------------------
// Ranking metrics, the naive way.

inline double naive_mrr(const std::vector<std::string>& ranked,
                        const std::unordered_set<std::string>& relevant) {
    for (std::size_t i = 0; i < ranked.size(); ++i)
        if (relevant.count(ranked[i]) != 0) return 1.0 / static_cast<double>(i + 1);
    return 0.0;
}

// Full-list nDCG: the ideal ranking places every relevant item on top, even
// when the ranked list is shorter, so missing relevant items cost score.
inline double naive_ndcg(const std::vector<std::string>& ranked,
                         const std::unordered_set<std::string>& relevant) {
    double dcg = 0.0;
    for (std::size_t i = 0; i < ranked.size(); ++i)
        if (relevant.count(ranked[i]) != 0)
            dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    double idcg = 0.0;
    for (std::size_t i = 0; i < relevant.size(); ++i)
        idcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    return idcg == 0.0 ? 0.0 : dcg / idcg;
}

inline double naive_rec_at_k(const std::vector<std::string>& ranked,
                             const std::unordered_set<std::string>& relevant, std::size_t k) {
    if (relevant.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i)
        if (relevant.count(ranked[i]) != 0) ++hits;
    return static_cast<double>(hits) / static_cast<double>(relevant.size());
}

// ---------------------------------------------------------------------------
// Co-occurrence and ranking oracles for keyword extraction.

/// Quadratic position scan: weight(u,v) = number of position pairs (i, j),
/// i < j, j - i < window, tokens[i] != tokens[j].
inline std::map<std::pair<std::string, std::string>, std::uint64_t> quadratic_cooccurrence(
    const std::vector<std::string>& tokens, int window) {
    std::map<std::pair<std::string, std::string>, std::uint64_t> weights;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        for (std::size_t j = i + 1; j < tokens.size() && j - i < static_cast<std::size_t>(window);
             ++j) {
            if (tokens[i] == tokens[j]) continue;
            auto key = std::minmax(tokens[i], tokens[j]);
            ++weights[{key.first, key.second}];
        }
    }
    return weights;
}

/// Dense synchronous power iteration over an explicit weight matrix:
/// s'(v) = (1 - d) + d * sum_u w(u,v)/deg(u) * s(u).
inline std::vector<double> dense_power_iteration(const std::vector<std::vector<double>>& w,
                                                 double damping, double tol, int max_iter) {
    const std::size_t n = w.size();
    std::vector<double> deg(n, 0.0);
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = 0; v < n; ++v) deg[u] += w[u][v];
    std::vector<double> score(n, 1.0);
    std::vector<double> next(n, 0.0);
    for (int it = 0; it < max_iter; ++it) {
        double max_delta = 0.0;
        for (std::size_t v = 0; v < n; ++v) {
            double acc = 0.0;
            for (std::size_t u = 0; u < n; ++u)
                if (w[u][v] > 0.0 && deg[u] > 0.0) acc += w[u][v] / deg[u] * score[u];
            next[v] = (1.0 - damping) + damping * acc;
            max_delta = std::max(max_delta, std::abs(next[v] - score[v]));
        }
        score.swap(next);
        if (max_delta < tol) break;
    }
    return score;
}

// ---------------------------------------------------------------------------
// Scratch directories.

class TempDir {
  public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<unsigned> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("citerec_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path file(const std::string& name) const { return path_ / name; }

  private:
    std::filesystem::path path_;
};

/// Wraps a provider and counts embed_batch calls and texts (for cache tests).
class CountingProvider final : public citerec::EmbeddingProvider {
  public:
    CountingProvider(std::shared_ptr<citerec::EmbeddingProvider> inner, std::size_t max_batch = 0)
        : inner_(std::move(inner)), max_batch_(max_batch) {}

    std::size_t dim() const override { return inner_->dim(); }
    std::string name() const override { return inner_->name(); }
    std::size_t max_batch_size() const override { return max_batch_; }
    std::vector<citerec::EmbeddingVector> embed_batch(
        const std::vector<std::string>& texts) override {
        ++calls;
        texts_embedded += texts.size();
        largest_batch = std::max(largest_batch, texts.size());
        return inner_->embed_batch(texts);
    }

    std::size_t calls = 0;
    std::size_t texts_embedded = 0;
    std::size_t largest_batch = 0;

  private:
    std::shared_ptr<citerec::EmbeddingProvider> inner_;
    std::size_t max_batch_;
};

}  // namespace testing_oracles
