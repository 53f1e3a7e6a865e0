#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "citerec/corpus.hpp"
#include "citerec/date.hpp"
#include "citerec/embedding.hpp"

namespace citerec {

/// Seeded synthetic benchmark generator. Documents fall into spherical
/// clusters: each vector is normalize(center + noise · gaussian), so
/// same-cluster pairs have high cosine similarity while cross-cluster pairs
/// sit near zero. Citations are planted within a document's cluster and
/// always point to strictly earlier filing dates:
///   - pre-split documents cite earlier pre-split documents;
///   - stream documents cite earlier stream documents with probability
///     in_range_fraction ("in-range" citations — only reachable by an index
///     that keeps up with the stream), otherwise pre-split documents.
/// Abstracts are token soup drawn from a per-cluster vocabulary, so TF-IDF
/// and keyword extraction see the same cluster structure the vectors have.
struct SynthConfig {
    std::uint64_t seed = 42;
    std::size_t dim = 32;
    std::size_t clusters = 50;
    std::size_t n_pre = 5000;       // filed before split_date
    std::size_t n_stream = 2000;    // filed on dates in [split_date, ...)
    std::size_t pre_dates = 100;    // distinct filing dates before the split
    std::size_t stream_dates = 100; // distinct filing dates from the split on
    Date split_date{2024, 1, 1};
    std::size_t cites_per_doc = 5;
    double in_range_fraction = 0.3;
    double noise = 0.25;

    void validate() const;  // throws ConfigError
};

struct SynthResult {
    CorpusStore corpus;
    VectorMap vectors;
    std::string provider_name;  // "synth:<dim>:<seed>" — tags the cache
};

/// Deterministic for a fixed config.
SynthResult gen_synthetic(const SynthConfig& cfg);

/// Writes the corpus JSONL and (when cache_path is non-empty) an embedding
/// cache holding the generated vectors under the synth provider tag.
void write_synthetic(const SynthResult& result, const std::filesystem::path& corpus_path,
                     const std::filesystem::path& cache_path);

}  // namespace citerec
