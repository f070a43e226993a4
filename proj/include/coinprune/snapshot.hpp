#pragma once
// Chunked UTXO snapshots and their layered identifier
//
//   id = hash256( hash256(header) || hash256(chunk_1) || ... || hash256(chunk_n) )
//
// File layout (.cpsnap): header(40) then, per chunk, len(4) || payload.

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "coinprune/chain.hpp"

namespace coinprune {

inline constexpr std::size_t kDefaultChunkLimit = 1'048'576;

struct SnapshotHeader {
    static constexpr std::size_t kSize = 40;

    std::uint32_t height = 0;
    Hash256 block_id;
    std::uint32_t chunk_count = 0;

    bool operator==(const SnapshotHeader&) const = default;
};

struct Chunk {
    Bytes payload;
    bool operator==(const Chunk&) const = default;
};

struct Snapshot {
    SnapshotHeader header;
    std::vector<Chunk> chunks;
    bool operator==(const Snapshot&) const = default;
};

struct SnapshotId {
    Hash256 digest;

    std::string hex() const { return digest.hex(); }
    auto operator<=>(const SnapshotId&) const = default;
};

class SnapshotError : public std::runtime_error {
public:
    enum class Kind { Tamper, Malformed };
    SnapshotError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

Bytes serialize_snapshot_header(const SnapshotHeader& h);
SnapshotHeader parse_snapshot_header(ByteView bytes);

/// Greedy packing of the canonical entry stream: a chunk closes when the
/// next entry would push it past `chunk_limit`. Entries never straddle
/// chunks. Throws std::invalid_argument if one entry exceeds the limit.
Snapshot create_snapshot(const UtxoSet& utxo, std::uint32_t height, const Hash256& block_id,
                         std::size_t chunk_limit = kDefaultChunkLimit);

/// [hash256(header), hash256(chunk_1), ...] as advertised in STATE inventories.
std::vector<Hash256> chunk_hashes(const Snapshot& snapshot);
SnapshotId snapshot_id_from_hashes(std::span<const Hash256> layer);
SnapshotId snapshot_id(const Snapshot& snapshot);

/// Decodes the entry stream, requiring strictly increasing outpoints.
/// Throws SnapshotError::Malformed.
UtxoSet decode_snapshot(const Snapshot& snapshot);

/// For untrusted snapshots: checks the chunk count, then the identifier,
/// then entry ordering. Count and ordering faults are Malformed; identifier
/// mismatch is Tamper.
UtxoSet verify_and_apply(const Snapshot& snapshot, const SnapshotId& expected);

Bytes write_snapshot_file(const Snapshot& snapshot);
/// Reads chunks until end of input; the header's chunk_count is not trusted
/// here (verify_and_apply checks it). Throws DecodeError on bad framing.
Snapshot read_snapshot_file(ByteView bytes);
std::size_t snapshot_file_size(const Snapshot& snapshot);

}  // namespace coinprune
