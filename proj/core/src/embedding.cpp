#include "citerec/embedding.hpp"

#include <algorithm>
#include <cmath>

#include "citerec/error.hpp"
#include "citerec/util.hpp"

namespace citerec {

namespace {
constexpr double kNormTolerance = 1e-4;
}

EmbeddingVector EmbeddingVector::from_raw(std::vector<float> values) {
    if (values.empty()) throw InvalidVectorError("empty embedding vector");
    for (float v : values)
        if (!std::isfinite(v)) throw InvalidVectorError("embedding contains NaN or inf");

    const double norm = l2_norm(values);
    if (norm == 0.0) throw InvalidVectorError("embedding has zero norm");
    if (std::abs(norm - 1.0) > kNormTolerance) {
        const auto inv = static_cast<float>(1.0 / norm);
        for (float& v : values) v *= inv;
    }
    EmbeddingVector out;
    out.values_ = std::move(values);
    return out;
}

EmbeddingVector EmbeddingVector::unit_axis(std::size_t dim, std::size_t axis) {
    if (dim == 0 || axis >= dim) throw InvalidVectorError("unit_axis: axis out of range");
    std::vector<float> v(dim, 0.0f);
    v[axis] = 1.0f;
    EmbeddingVector out;
    out.values_ = std::move(v);
    return out;
}

double dot_product(std::span<const float> a, std::span<const float> b) {
    // Four independent accumulator chains: a fixed summation order that the
    // compiler can still vectorize without reassociation. The order is
    // identical for (a, b) and (b, a), making the result exactly symmetric.
    const std::size_t n = a.size();
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += static_cast<double>(a[i]) * static_cast<double>(b[i]);
        s1 += static_cast<double>(a[i + 1]) * static_cast<double>(b[i + 1]);
        s2 += static_cast<double>(a[i + 2]) * static_cast<double>(b[i + 2]);
        s3 += static_cast<double>(a[i + 3]) * static_cast<double>(b[i + 3]);
    }
    for (; i < n; ++i) s0 += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return (s0 + s1) + (s2 + s3);
}

double l2_norm(std::span<const float> v) {
    return std::sqrt(dot_product(v, v));
}

float cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim()) throw DimMismatchError(a.dim(), b.dim());
    const double d = dot_product(a.values(), b.values());
    return static_cast<float>(std::clamp(d, -1.0, 1.0));
}

// ---------------------------------------------------------------------------

EmbeddingVector hash_embed(const std::string& text, std::size_t dim, std::uint64_t seed) {
    if (dim < 2) throw InvalidVectorError("hash_embed requires dim >= 2");
    const std::uint64_t base = fnv1a64(text, fnv1a64_bytes(&seed, sizeof(seed)));
    std::vector<float> v(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        // One well-mixed 64-bit stream value per component, mapped into
        // (-1, 1). Normalization below makes the result a unit vector.
        const std::uint64_t bits = splitmix64(base + 0x9e3779b97f4a7c15ULL * (i + 1));
        const double u = (static_cast<double>(bits >> 11) + 0.5) / 9007199254740992.0;
        v[i] = static_cast<float>(2.0 * u - 1.0);
    }
    return EmbeddingVector::from_raw(std::move(v));
}

std::string HashProvider::name() const {
    return "hash:" + std::to_string(dim_) + ":" + std::to_string(seed_);
}

std::vector<EmbeddingVector> HashProvider::embed_batch(
    const std::vector<std::string>& texts) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(hash_embed(t, dim_, seed_));
    return out;
}

}  // namespace citerec
