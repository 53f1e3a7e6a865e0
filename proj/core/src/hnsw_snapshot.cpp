#include <algorithm>
#include <mutex>

#include "citerec/error.hpp"
#include "citerec/hnsw.hpp"
#include "citerec/util.hpp"

namespace citerec {

namespace {
constexpr char kMagic[4] = {'H', 'N', 'S', 'W'};
constexpr std::uint16_t kFormatVersion = 1;
}  // namespace

/// Snapshot layout (all integers little-endian):
///   "HNSW" | version u16
///   params: M u32 | M_max0 u32 | ef_construction u32 | m_L f64 | rng_seed u64
///   dim u32 | count u64
///   node table, count times: id str16 | max_layer u8 | dim × f32
///   adjacency, count times, per layer 0..max_layer:
///     varint n | varint first_id | varint gap ... (ids sorted ascending)
///   fnv1a-64 checksum of all preceding bytes, u64
///
/// Adjacency is written sorted, which makes snapshots canonical: a fixed
/// seed and insertion order yield byte-identical files. Search behavior
/// depends only on the edge set, so the re-ordering is invisible to queries.
/// ef_search is a runtime knob, deliberately not part of the format; the
/// entry point is recoverable (first node at the maximal layer), so it is
/// not stored either.
struct SnapshotCodec {
    static std::string encode(const HnswIndex& x) {
        std::string buf;
        BufWriter w(buf);
        w.bytes(kMagic, 4);
        w.u16(kFormatVersion);
        w.u32(static_cast<std::uint32_t>(x.params_.M));
        w.u32(static_cast<std::uint32_t>(x.params_.effective_m_max0()));
        w.u32(static_cast<std::uint32_t>(x.params_.ef_construction));
        w.f64(x.params_.effective_level_multiplier());
        w.u64(x.params_.rng_seed);
        w.u32(static_cast<std::uint32_t>(x.dim_));
        w.u64(x.external_ids_.size());

        for (std::size_t i = 0; i < x.external_ids_.size(); ++i) {
            w.str16(x.external_ids_[i]);
            if (x.levels_[i] > 255) throw Error("node level exceeds format limit");
            w.u8(static_cast<std::uint8_t>(x.levels_[i]));
            const auto* v = x.vectors_.data() + i * x.dim_;
            for (std::size_t d = 0; d < x.dim_; ++d) w.f32(v[d]);
        }

        std::vector<std::int32_t> sorted;
        for (std::size_t i = 0; i < x.external_ids_.size(); ++i) {
            for (const auto& list : x.links_[i]) {
                sorted.assign(list.begin(), list.end());
                std::sort(sorted.begin(), sorted.end());
                w.varint(sorted.size());
                std::int32_t prev = 0;
                for (std::size_t j = 0; j < sorted.size(); ++j) {
                    const std::int32_t delta = j == 0 ? sorted[j] : sorted[j] - prev;
                    w.varint(static_cast<std::uint64_t>(delta));
                    prev = sorted[j];
                }
            }
        }

        w.u64(fnv1a64(buf));
        return buf;
    }

    static HnswIndex decode(std::span<const char> bytes) {
        if (bytes.size() < 8 + 6)
            throw CorruptSnapshotError("snapshot too small to be valid");
        const std::size_t body = bytes.size() - 8;
        {
            BufReader tail(bytes.subspan(body));
            if (tail.u64() != fnv1a64_bytes(bytes.data(), body))
                throw CorruptSnapshotError("snapshot checksum mismatch");
        }

        try {
            BufReader r(bytes.subspan(0, body));
            char magic[4];
            r.bytes(magic, 4);
            if (std::memcmp(magic, kMagic, 4) != 0)
                throw CorruptSnapshotError("not an index snapshot");
            const std::uint16_t version = r.u16();
            if (version != kFormatVersion)
                throw FormatVersionMismatchError("snapshot format version " +
                                                 std::to_string(version) +
                                                 " unsupported (expected " +
                                                 std::to_string(kFormatVersion) + ")");

            HnswParams params;
            params.M = static_cast<int>(r.u32());
            params.M_max0 = static_cast<int>(r.u32());
            params.ef_construction = static_cast<int>(r.u32());
            params.level_multiplier = r.f64();
            params.rng_seed = r.u64();
            const std::size_t dim = r.u32();
            const std::uint64_t count = r.u64();

            HnswIndex x = [&] {
                try {
                    return HnswIndex(params);
                } catch (const ConfigError& e) {
                    throw CorruptSnapshotError(std::string("snapshot params invalid: ") +
                                               e.what());
                }
            }();
            x.dim_ = dim;
            if (count > 0 && dim == 0)
                throw CorruptSnapshotError("snapshot has nodes but dim 0");

            x.external_ids_.reserve(count);
            x.levels_.reserve(count);
            x.vectors_.reserve(count * dim);
            int global_max = 0;
            for (std::uint64_t i = 0; i < count; ++i) {
                std::string id = r.str16();
                const int level = r.u8();
                global_max = std::max(global_max, level);
                for (std::size_t d = 0; d < dim; ++d) x.vectors_.push_back(r.f32());
                auto [it, inserted] =
                    x.id_map_.emplace(std::move(id), static_cast<std::int32_t>(i));
                if (!inserted)
                    throw CorruptSnapshotError("snapshot contains duplicate id: " + it->first);
                x.external_ids_.push_back(it->first);
                x.levels_.push_back(level);
            }

            x.links_.resize(count);
            for (std::uint64_t i = 0; i < count; ++i) {
                x.links_[i].resize(static_cast<std::size_t>(x.levels_[i]) + 1);
                for (auto& list : x.links_[i]) {
                    const std::uint64_t n = r.varint();
                    if (n > count)
                        throw CorruptSnapshotError("adjacency list longer than node count");
                    list.reserve(n);
                    std::int64_t prev = 0;
                    for (std::uint64_t j = 0; j < n; ++j) {
                        const std::int64_t value =
                            j == 0 ? static_cast<std::int64_t>(r.varint())
                                   : prev + static_cast<std::int64_t>(r.varint());
                        if (value < 0 || value >= static_cast<std::int64_t>(count))
                            throw CorruptSnapshotError("neighbor id out of range");
                        if (value == static_cast<std::int64_t>(i))
                            throw CorruptSnapshotError("self-loop in snapshot adjacency");
                        list.push_back(static_cast<std::int32_t>(value));
                        prev = value;
                    }
                }
            }
            if (r.remaining() != 0)
                throw CorruptSnapshotError("trailing bytes inside snapshot body");

            // Entry point: the index updates it only when a new node's level
            // strictly exceeds the old maximum, so the live entry point is
            // always the lowest internal id at the maximal layer.
            for (std::uint64_t i = 0; i < count; ++i) {
                if (x.levels_[i] == global_max) {
                    x.entry_point_ = static_cast<std::int32_t>(i);
                    break;
                }
            }
            x.sampler_.counter = count;  // resume the level sequence
            return x;
        } catch (const BufferUnderflowError&) {
            throw CorruptSnapshotError("snapshot truncated");
        }
    }
};

std::string HnswIndex::snapshot_bytes() const {
    std::shared_lock lk(*mu_);
    return SnapshotCodec::encode(*this);
}

HnswIndex HnswIndex::from_snapshot_bytes(std::span<const char> bytes) {
    return SnapshotCodec::decode(bytes);
}

void HnswIndex::save(const std::filesystem::path& path) const {
    write_file_atomic(path, snapshot_bytes());
}

HnswIndex HnswIndex::load(const std::filesystem::path& path) {
    const std::string data = read_file_bytes(path);
    return SnapshotCodec::decode(data);
}

}  // namespace citerec
