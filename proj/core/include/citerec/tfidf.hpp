#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "citerec/corpus.hpp"
#include "citerec/embedding.hpp"

namespace citerec {

/// Vocabulary + IDF table fitted on a corpus. Immutable once fitted and
/// safe to share across threads. Weighting: tf = raw count,
/// idf = ln((1 + N) / (1 + df)) + 1, vectors L2-normalized.
struct TfIdfModel {
    std::vector<std::string> vocabulary;            // index = vector dimension
    std::vector<double> idf;                        // aligned with vocabulary
    std::unordered_map<std::string, std::size_t> term_index;
    std::string tokenizer_id;
    std::size_t corpus_size = 0;                    // N documents at fit time

    std::size_t dim() const { return vocabulary.size(); }

    /// Stable fingerprint of (vocabulary, idf, tokenizer); part of the
    /// provider name so caches are invalidated when the model changes.
    std::string fingerprint() const;

    /// Documents embedded so far that contained no in-vocabulary term (they
    /// receive the reserved unit vector on the last axis).
    std::uint64_t oov_documents() const { return oov_counter_->load(); }

    std::shared_ptr<std::atomic<std::uint64_t>> oov_counter_ =
        std::make_shared<std::atomic<std::uint64_t>>(0);
};

/// Fits the vocab_size highest-document-frequency terms (ties lexicographic)
/// and their IDF. Throws EmptyVocabularyError when tokenization yields no
/// terms, EmptyCorpusError on an empty corpus, ConfigError on bad arguments.
TfIdfModel tfidf_fit(const CorpusStore& corpus, std::size_t vocab_size = 10000,
                     const std::string& tokenizer_id = "unicode");

/// Embeds one text under the model. Zero in-vocabulary terms → reserved unit
/// vector on the last axis (and the model's oov counter increments).
EmbeddingVector tfidf_embed(const TfIdfModel& model, const std::string& text);

/// EmbeddingProvider adapter over a fitted model.
class TfIdfProvider final : public EmbeddingProvider {
  public:
    explicit TfIdfProvider(TfIdfModel model) : model_(std::move(model)) {}

    std::size_t dim() const override { return model_.dim(); }
    std::string name() const override;
    std::vector<EmbeddingVector> embed_batch(
        const std::vector<std::string>& texts) override;

    const TfIdfModel& model() const { return model_; }

  private:
    TfIdfModel model_;
};

}  // namespace citerec
