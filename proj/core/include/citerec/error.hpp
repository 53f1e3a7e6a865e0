#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace citerec {

/// Root of the library's exception hierarchy. Everything thrown on purpose
/// derives from this, so callers can catch citerec::Error at the boundary.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Configuration / input validation

struct ConfigError : Error {
    using Error::Error;
};

struct InvalidRangeError : ConfigError {
    using ConfigError::ConfigError;
};

// ---------------------------------------------------------------------------
// Corpus ingestion

struct MalformedLineError : Error {
    MalformedLineError(std::size_t line_no, const std::string& reason)
        : Error("line " + std::to_string(line_no) + ": " + reason), line_no(line_no) {}
    std::size_t line_no;
};

struct DuplicateIdError : Error {
    explicit DuplicateIdError(const std::string& id)
        : Error("duplicate id: " + id), id(id) {}
    DuplicateIdError(std::size_t line_no, const std::string& id)
        : Error("line " + std::to_string(line_no) + ": duplicate id: " + id),
          id(id), line_no(line_no) {}
    std::string id;
    std::size_t line_no = 0;
};

struct EmptyCorpusError : Error {
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Embeddings, caching, and remote provider

struct DimMismatchError : Error {
    DimMismatchError(std::size_t expected, std::size_t got)
        : Error("dimension mismatch: expected " + std::to_string(expected) +
                ", got " + std::to_string(got)),
          expected(expected), got(got) {}
    std::size_t expected;
    std::size_t got;
};

struct InvalidVectorError : Error {
    using Error::Error;
};

struct EmptyVocabularyError : Error {
    using Error::Error;
};

struct CacheTagMismatchError : Error {
    using Error::Error;
};

struct ProviderError : Error {
    using Error::Error;
};

struct AuthError : ProviderError {
    using ProviderError::ProviderError;
};

struct RateLimitedError : ProviderError {
    using ProviderError::ProviderError;
};

struct TransportError : ProviderError {
    using ProviderError::ProviderError;
};

struct ProviderDimMismatchError : ProviderError {
    using ProviderError::ProviderError;
};

// ---------------------------------------------------------------------------
// Index

struct EmptyIndexError : Error {
    using Error::Error;
};

struct EfTooSmallError : Error {
    EfTooSmallError(int ef, int k)
        : Error("ef_search=" + std::to_string(ef) +
                " is smaller than requested k=" + std::to_string(k)),
          ef(ef), k(k) {}
    int ef;
    int k;
};

struct UnknownIdError : Error {
    explicit UnknownIdError(const std::string& id)
        : Error("unknown id: " + id), id(id) {}
    std::string id;
};

struct FormatVersionMismatchError : Error {
    using Error::Error;
};

struct CorruptSnapshotError : Error {
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Recommendation / evaluation

struct MissingRankVectorError : Error {
    explicit MissingRankVectorError(const std::string& id)
        : Error("no embedding available for candidate: " + id), id(id) {}
    std::string id;
};

struct EmptyResultSetError : Error {
    using Error::Error;
};

struct NoQueriesError : Error {
    using Error::Error;
};

/// A record admitted to the index before a query that should not have been
/// visible to it yet (or vice versa). Raised by the rolling-update protocol's
/// hygiene check; seeing this means the evaluation harness itself is broken.
struct TemporalHygieneError : Error {
    using Error::Error;
};

// ---------------------------------------------------------------------------
// I/O

struct IoError : Error {
    using Error::Error;
};

}  // namespace citerec
