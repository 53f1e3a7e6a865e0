#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace citerec {

/// Fixed-dimension unit-length float vector. Construction validates the
/// no-NaN/no-inf invariant and re-normalizes when the Euclidean norm strays
/// more than 1e-4 from 1, so every instance satisfies ‖v‖₂ = 1 ± 1e-4.
class EmbeddingVector {
  public:
    EmbeddingVector() = default;

    /// Validates and (if needed) normalizes. Throws InvalidVectorError on
    /// NaN/inf components, an empty vector, or an all-zero vector.
    static EmbeddingVector from_raw(std::vector<float> values);

    /// Standard basis vector e_axis.
    static EmbeddingVector unit_axis(std::size_t dim, std::size_t axis);

    std::size_t dim() const { return values_.size(); }
    bool empty() const { return values_.empty(); }
    std::span<const float> values() const { return values_; }
    float operator[](std::size_t i) const { return values_[i]; }

    bool operator==(const EmbeddingVector&) const = default;

  private:
    std::vector<float> values_;
};

/// Dot product with a fixed, platform-independent summation order
/// (four double accumulators combined pairwise). Symmetric by construction.
double dot_product(std::span<const float> a, std::span<const float> b);

/// Cosine similarity of unit vectors = dot product, clamped to [-1, 1].
/// Throws DimMismatchError.
float cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

double l2_norm(std::span<const float> v);

using VectorMap = std::unordered_map<std::string, EmbeddingVector>;

// ---------------------------------------------------------------------------

/// A source of embeddings. Implementations must be safe for concurrent
/// embed_batch calls and must return exactly one dim()-length unit vector
/// per input text, in input order.
class EmbeddingProvider {
  public:
    virtual ~EmbeddingProvider() = default;

    virtual std::size_t dim() const = 0;

    /// Stable identifier; caches are tagged with it, so it must change
    /// whenever the provider would produce different vectors.
    virtual std::string name() const = 0;

    /// Maximum accepted batch size; 0 means unbounded.
    virtual std::size_t max_batch_size() const { return 0; }

    virtual std::vector<EmbeddingVector> embed_batch(
        const std::vector<std::string>& texts) = 0;
};

// ---------------------------------------------------------------------------

/// Deterministic offline provider: a pseudo-random unit vector derived from
/// (text, seed). Equal texts map to equal vectors; unrelated texts are
/// near-orthogonal in expectation for large dim.
EmbeddingVector hash_embed(const std::string& text, std::size_t dim, std::uint64_t seed);

class HashProvider final : public EmbeddingProvider {
  public:
    HashProvider(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {}

    std::size_t dim() const override { return dim_; }
    std::string name() const override;
    std::vector<EmbeddingVector> embed_batch(
        const std::vector<std::string>& texts) override;

  private:
    std::size_t dim_;
    std::uint64_t seed_;
};

// ---------------------------------------------------------------------------

/// Environment variable holding the remote provider credential.
inline const char* kEmbedApiKeyEnv = "ENGINE_EMBED_API_KEY";

struct RemoteProviderConfig {
    std::string endpoint = "https://api.openai.com/v1";  // base URL; "/embeddings" is appended
    std::string model = "text-embedding-3-large";
    std::size_t dim = 3072;
    std::size_t batch_size = 128;   // maximum texts per request
    int max_retries = 5;            // attempts for transient failures
    double backoff_base_seconds = 1.0;
    double timeout_seconds = 60.0;
    std::string api_key;            // empty → read from ENGINE_EMBED_API_KEY
};

/// OpenAI-compatible embeddings client: POST {endpoint}/embeddings with a
/// JSON body {"model": ..., "input": [...]}. Transient failures (HTTP 5xx,
/// 429, transport errors) are retried with exponential backoff and jitter;
/// auth failures are not retried.
class RemoteProvider final : public EmbeddingProvider {
  public:
    explicit RemoteProvider(RemoteProviderConfig config);

    std::size_t dim() const override { return config_.dim; }
    std::string name() const override;
    std::size_t max_batch_size() const override { return config_.batch_size; }

    /// Throws AuthError, RateLimitedError, ProviderDimMismatchError,
    /// TransportError, ConfigError (empty batch / empty text / oversize batch).
    std::vector<EmbeddingVector> embed_batch(
        const std::vector<std::string>& texts) override;

    /// Total HTTP attempts made by this provider instance (for tests and
    /// run manifests).
    std::uint64_t attempts_made() const;

    const RemoteProviderConfig& config() const { return config_; }

  private:
    RemoteProviderConfig config_;
    struct Counters;
    std::shared_ptr<Counters> counters_;
};

}  // namespace citerec
