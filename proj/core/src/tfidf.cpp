#include "citerec/tfidf.hpp"

#include <algorithm>
#include <cmath>

#include "citerec/error.hpp"
#include "citerec/tokenize.hpp"
#include "citerec/util.hpp"

namespace citerec {

std::string TfIdfModel::fingerprint() const {
    std::uint64_t h = fnv1a64(tokenizer_id);
    for (const auto& term : vocabulary) {
        h = fnv1a64(term, h);
        h = fnv1a64("\x1f", h);  // separator so ["ab","c"] != ["a","bc"]
    }
    for (double v : idf) h = fnv1a64_bytes(&v, sizeof(v), h);
    return to_hex(h);
}

TfIdfModel tfidf_fit(const CorpusStore& corpus, std::size_t vocab_size,
                     const std::string& tokenizer_id) {
    if (corpus.empty()) throw EmptyCorpusError("tfidf_fit on an empty corpus");
    if (vocab_size == 0) throw ConfigError("vocab_size must be positive");
    if (!is_known_tokenizer(tokenizer_id))
        throw ConfigError("unknown tokenizer: " + tokenizer_id);

    // Document frequency per term, iterated in deterministic corpus order.
    std::unordered_map<std::string, std::size_t> df;
    std::unordered_set<std::string> seen;
    for (const PatentRecord* rec : corpus.records_in_date_order()) {
        seen.clear();
        for (auto& tok : tokenize(rec->abstract_text, tokenizer_id))
            if (seen.insert(tok).second) ++df[tok];
    }
    if (df.empty()) throw EmptyVocabularyError("corpus tokenizes to zero terms");

    // Top vocab_size by document frequency; ties break lexicographically.
    std::vector<std::pair<std::string, std::size_t>> terms(df.begin(), df.end());
    std::sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (terms.size() > vocab_size) terms.resize(vocab_size);

    // The vector dimension order itself is lexicographic over the selected
    // terms, so the model is independent of hash-map iteration order.
    std::sort(terms.begin(), terms.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    TfIdfModel model;
    model.tokenizer_id = tokenizer_id;
    model.corpus_size = corpus.size();
    const double n = static_cast<double>(corpus.size());
    model.vocabulary.reserve(terms.size());
    model.idf.reserve(terms.size());
    for (std::size_t i = 0; i < terms.size(); ++i) {
        model.vocabulary.push_back(terms[i].first);
        model.idf.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(terms[i].second))) +
                            1.0);
        model.term_index.emplace(terms[i].first, i);
    }
    return model;
}

EmbeddingVector tfidf_embed(const TfIdfModel& model, const std::string& text) {
    if (model.dim() == 0) throw EmptyVocabularyError("model is not fitted");

    // Term counts restricted to the vocabulary.
    std::unordered_map<std::size_t, std::size_t> counts;
    for (auto& tok : tokenize(text, model.tokenizer_id)) {
        auto it = model.term_index.find(tok);
        if (it != model.term_index.end()) ++counts[it->second];
    }
    if (counts.empty()) {
        model.oov_counter_->fetch_add(1);
        return EmbeddingVector::unit_axis(model.dim(), model.dim() - 1);
    }

    // Fixed ascending-index order keeps the norm's summation order (and so
    // the output bits) independent of hash-map iteration.
    std::vector<std::pair<std::size_t, std::size_t>> sorted(counts.begin(), counts.end());
    std::sort(sorted.begin(), sorted.end());

    std::vector<float> v(model.dim(), 0.0f);
    double sq = 0.0;
    for (const auto& [idx, tf] : sorted) {
        const double w = static_cast<double>(tf) * model.idf[idx];
        sq += w * w;
    }
    const double inv = 1.0 / std::sqrt(sq);
    for (const auto& [idx, tf] : sorted)
        v[idx] = static_cast<float>(static_cast<double>(tf) * model.idf[idx] * inv);
    return EmbeddingVector::from_raw(std::move(v));
}

std::string TfIdfProvider::name() const {
    return "tfidf:" + model_.tokenizer_id + ":" + std::to_string(model_.dim()) + ":" +
           model_.fingerprint();
}

std::vector<EmbeddingVector> TfIdfProvider::embed_batch(
    const std::vector<std::string>& texts) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(tfidf_embed(model_, t));
    return out;
}

}  // namespace citerec
