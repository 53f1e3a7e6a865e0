#include "citerec/textrank.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <sstream>

#include "citerec/error.hpp"
#include "citerec/tokenize.hpp"
#include "citerec/util.hpp"

namespace citerec {

std::uint64_t CooccurrenceGraph::edge_weight(std::size_t u, std::size_t v) const {
    for (const auto& [n, w] : adjacency[u])
        if (n == v) return w;
    return 0;
}

std::uint64_t CooccurrenceGraph::weighted_degree(std::size_t u) const {
    std::uint64_t total = 0;
    for (const auto& [n, w] : adjacency[u]) total += w;
    return total;
}

CooccurrenceGraph build_graph(const std::vector<std::string>& tokens, int window) {
    if (window < 2) throw ConfigError("co-occurrence window must be >= 2");

    CooccurrenceGraph g;
    std::vector<std::size_t> ids(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        auto [it, inserted] = g.index.emplace(tokens[i], g.words.size());
        if (inserted) g.words.push_back(tokens[i]);
        ids[i] = it->second;
    }
    g.adjacency.resize(g.words.size());

    // Position pairs i < j with j − i < window; distinct words only. Counts
    // accumulate across overlapping windows.
    std::map<std::pair<std::size_t, std::size_t>, std::uint64_t> weights;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const std::size_t jmax =
            std::min(tokens.size(), i + static_cast<std::size_t>(window));
        for (std::size_t j = i + 1; j < jmax; ++j) {
            if (ids[i] == ids[j]) continue;
            const auto key = std::minmax(ids[i], ids[j]);
            ++weights[{key.first, key.second}];
        }
    }
    for (const auto& [edge, w] : weights) {
        g.adjacency[edge.first].emplace_back(edge.second, w);
        g.adjacency[edge.second].emplace_back(edge.first, w);
    }
    for (auto& list : g.adjacency) std::sort(list.begin(), list.end());
    return g;
}

RankScores rank_words(const CooccurrenceGraph& graph, double damping, double tol,
                      int max_iter) {
    if (graph.node_count() == 0)
        throw EmptyResultSetError("rank_words on an empty graph");
    if (damping <= 0.0 || damping >= 1.0)
        throw ConfigError("damping must lie in (0, 1)");

    const std::size_t n = graph.node_count();
    std::vector<double> degree(n);
    for (std::size_t u = 0; u < n; ++u)
        degree[u] = static_cast<double>(graph.weighted_degree(u));

    std::vector<double> score(n, 1.0), next(n);
    RankScores out;
    for (int iter = 1; iter <= max_iter; ++iter) {
        // Synchronous update: next scores depend only on the previous
        // iterate, so node order cannot influence the result.
        for (std::size_t v = 0; v < n; ++v) {
            double acc = 0.0;
            for (const auto& [u, w] : graph.adjacency[v])
                acc += static_cast<double>(w) / degree[u] * score[u];
            next[v] = (1.0 - damping) + damping * acc;
        }
        double max_delta = 0.0;
        for (std::size_t v = 0; v < n; ++v)
            max_delta = std::max(max_delta, std::abs(next[v] - score[v]));
        score.swap(next);
        out.iterations = iter;
        if (max_delta < tol) {
            out.converged = true;
            break;
        }
    }
    for (std::size_t v = 0; v < n; ++v) out.scores.emplace(graph.words[v], score[v]);
    return out;
}

bool StopFilter::keep(const std::string& token) const {
    if (codepoint_count(token) < min_chars) return false;
    return !stopwords.contains(token);
}

StopFilter StopFilter::default_english() {
    StopFilter f;
    f.stopwords = {
        "a",     "an",    "and",   "are",   "as",    "at",    "be",    "been",
        "but",   "by",    "can",   "for",   "from",  "has",   "have",  "in",
        "is",    "it",    "its",   "may",   "more",  "not",   "of",    "on",
        "or",    "said",  "such",  "that",  "the",   "their", "then",  "there",
        "thereby", "therein", "thereof", "these", "this",  "to",    "was",
        "were", "when",  "where", "whereby", "wherein", "which", "while",
        "with",  "within", "without",
    };
    return f;
}

StopFilter StopFilter::none() {
    StopFilter f;
    f.min_chars = 0;
    return f;
}

namespace {

std::string join_phrase(const std::vector<std::string>& run) {
    std::string out;
    for (std::size_t i = 0; i < run.size(); ++i) {
        // CJK tokens were split from unspaced text, so they rejoin without a
        // separator; everything else re-joins with single spaces.
        if (i > 0 && !(is_cjk_token(run[i - 1]) && is_cjk_token(run[i]))) out += ' ';
        out += run[i];
    }
    return out;
}

}  // namespace

KeywordSet extract_keywords(const std::vector<std::string>& tokens,
                            const StopFilter& filter, int top_n, int window) {
    if (top_n < 1) throw ConfigError("top_n must be >= 1");

    std::vector<std::string> content;
    content.reserve(tokens.size());
    for (const auto& t : tokens)
        if (filter.keep(t)) content.push_back(t);

    KeywordSet result;
    if (content.empty()) return result;

    const CooccurrenceGraph graph = build_graph(content, window);
    const RankScores ranked = rank_words(graph, 0.85, 1e-6, 100);
    result.converged = ranked.converged;

    std::vector<ScoredWord> order;
    order.reserve(ranked.scores.size());
    for (const auto& [word, score] : ranked.scores) order.push_back({word, score});
    std::sort(order.begin(), order.end(), [](const ScoredWord& a, const ScoredWord& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.word < b.word;
    });
    if (order.size() > static_cast<std::size_t>(top_n))
        order.resize(static_cast<std::size_t>(top_n));
    result.keywords = std::move(order);

    std::unordered_set<std::string> member;
    for (const auto& kw : result.keywords) member.insert(kw.word);

    // Maximal runs of consecutive S-members in the original sequence.
    std::vector<std::string> run;
    auto flush = [&] {
        if (!run.empty()) {
            result.merged_phrases.push_back(join_phrase(run));
            run.clear();
        }
    };
    for (const auto& t : tokens) {
        if (member.contains(t))
            run.push_back(t);
        else
            flush();
    }
    flush();
    return result;
}

std::map<std::string, std::uint64_t> corpus_keyword_frequencies(
    const CorpusStore& corpus, const StopFilter& filter, const std::string& tokenizer_id,
    int top_n, int window, unsigned threads) {
    const std::vector<const PatentRecord*> records = corpus.records_in_date_order();
    std::vector<std::vector<std::string>> per_doc(records.size());
    parallel_for(records.size(), threads, [&](std::size_t i) {
        const KeywordSet ks =
            extract_keywords(tokenize(records[i]->abstract_text, tokenizer_id), filter,
                             top_n, window);
        per_doc[i] = ks.merged_phrases;
    });

    std::map<std::string, std::uint64_t> freq;
    for (const auto& phrases : per_doc)
        for (const auto& p : phrases) ++freq[p];
    return freq;
}

std::string keyword_frequencies_csv(const std::map<std::string, std::uint64_t>& freq) {
    std::vector<std::pair<std::string, std::uint64_t>> rows(freq.begin(), freq.end());
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    std::ostringstream out;
    out << "keyword,count\n";
    for (const auto& [word, count] : rows) {
        if (word.find_first_of(",\"\n") != std::string::npos) {
            std::string quoted = "\"";
            for (char c : word) {
                if (c == '"') quoted += "\"\"";
                else quoted += c;
            }
            quoted += '"';
            out << quoted;
        } else {
            out << word;
        }
        out << ',' << count << '\n';
    }
    return out.str();
}

}  // namespace citerec
