#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "citerec/corpus.hpp"

namespace citerec {

/// Undirected weighted word co-occurrence graph. Edge weights are positive
/// integer co-occurrence counts; no self-loops. Node order is first
/// occurrence in the token stream (deterministic for fixed input).
struct CooccurrenceGraph {
    std::vector<std::string> words;                      // node index → word
    std::unordered_map<std::string, std::size_t> index;  // word → node index
    // adjacency[u] = (v, weight), sorted by v ascending after freezing.
    std::vector<std::vector<std::pair<std::size_t, std::uint64_t>>> adjacency;

    std::size_t node_count() const { return words.size(); }
    std::uint64_t edge_weight(std::size_t u, std::size_t v) const;
    std::uint64_t weighted_degree(std::size_t u) const;
};

/// Sliding-window co-occurrence: every pair of distinct words whose
/// positions i < j satisfy j − i < window accumulates +1 edge weight.
/// Throws ConfigError when window < 2. Empty input → empty graph.
CooccurrenceGraph build_graph(const std::vector<std::string>& tokens, int window = 10);

struct RankScores {
    std::unordered_map<std::string, double> scores;
    bool converged = false;
    int iterations = 0;
};

/// Weighted PageRank fixpoint, non-normalized form:
///   score(v) = (1 − d) + d · Σ_u  w(u,v) / Σ_x w(u,x) · score(u)
/// iterated synchronously until the max absolute change drops below tol or
/// max_iter is hit (converged flag reports which). Isolated nodes settle at
/// 1 − d. Throws EmptyResultSetError on an empty graph.
RankScores rank_words(const CooccurrenceGraph& graph, double damping = 0.85,
                      double tol = 1e-6, int max_iter = 100);

/// Content-word filter: drops stopwords and tokens shorter than min_chars
/// code points.
struct StopFilter {
    std::unordered_set<std::string> stopwords;
    std::size_t min_chars = 2;

    bool keep(const std::string& token) const;
    static StopFilter default_english();
    static StopFilter none();  // keeps everything
};

struct ScoredWord {
    std::string word;
    double score;
    bool operator==(const ScoredWord&) const = default;
};

struct KeywordSet {
    std::vector<ScoredWord> keywords;         // |S| ≤ top_n, scores descending
    std::vector<std::string> merged_phrases;  // every occurrence, stream order
    bool converged = true;
};

/// Full per-document extraction: filter tokens to content words, build the
/// window graph over the filtered sequence, rank, keep the top_n into S
/// (score descending, lexicographic on ties), then scan the original token
/// sequence merging maximal runs of consecutive S-members into phrases — a
/// non-content token between two S-words breaks the run. Single S-words
/// count as one-word phrases; multi-word runs join with spaces (adjacent CJK
/// tokens concatenate).
KeywordSet extract_keywords(const std::vector<std::string>& tokens,
                            const StopFilter& filter, int top_n = 10, int window = 10);

/// Extraction over every abstract; per-phrase occurrence counts across the
/// corpus. Parallelizes across documents; result is deterministic.
std::map<std::string, std::uint64_t> corpus_keyword_frequencies(
    const CorpusStore& corpus, const StopFilter& filter,
    const std::string& tokenizer_id = "unicode", int top_n = 10, int window = 10,
    unsigned threads = 1);

/// CSV "keyword,count", descending count, lexicographic tiebreak. Keywords
/// containing commas or quotes are double-quoted per RFC 4180.
std::string keyword_frequencies_csv(const std::map<std::string, std::uint64_t>& freq);

}  // namespace citerec
