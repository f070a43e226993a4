#pragma once
// Per-node storage model: header metadata for every height, full bodies for
// the unpruned upper range, retained snapshots and the live UTXO set. All
// sizes are exact serialized byte counts.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "coinprune/chain.hpp"
#include "coinprune/snapshot.hpp"
#include "coinprune/validation.hpp"

namespace coinprune {

struct PersistedBlockMeta {
    // block_id(32) header(80) height(4) cumulative_work(8) tx_count(4) timestamp(4)
    static constexpr std::size_t kRecordSize = 132;

    Hash256 block_id;
    BlockHeader header;
    std::uint32_t height = 0;
    Work cumulative_work = 0;
    std::uint32_t tx_count = 0;
    std::uint32_t timestamp = 0;

    bool operator==(const PersistedBlockMeta&) const = default;
};

/// Throws std::overflow_error if cumulative work does not fit the 8-byte field.
Bytes serialize_meta(const PersistedBlockMeta& meta);
PersistedBlockMeta parse_meta(ByteView record);

struct StorageReport {
    std::uint64_t bytes_bodies = 0;
    std::uint64_t bytes_metas = 0;
    std::uint64_t bytes_snapshot = 0;
    std::uint64_t bytes_utxo = 0;

    bool operator==(const StorageReport&) const = default;
};

class StoreError : public std::runtime_error {
public:
    enum class Kind { NonContiguous, NoAcceptedSnapshot, BeyondSnapshot, FatalReorg, UnknownSnapshot, Io };
    StoreError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

struct StoredSnapshot {
    Snapshot snapshot;
    SnapshotId id;
    bool accepted = false;
};

class NodeStore {
public:
    explicit NodeStore(bool archival = false) : archival_(archival) {}

    /// Appends the body and its derived meta at `height` (must be tip + 1).
    void record_block(const Block& block, std::uint32_t height);
    /// Appends a meta without a body; only valid below any stored body.
    void record_header(const BlockHeader& header, std::uint32_t height, std::uint32_t tx_count);
    /// Drops metas and bodies above `height`. Removing below the prune
    /// height is a fatal reorg for a pruned store.
    void truncate_above(std::uint32_t height);

    /// Drops bodies below `height`. Requires an accepted snapshot at
    /// `height - 1` or later. Archival stores ignore the request.
    void prune_below(std::uint32_t height);

    void add_candidate(Snapshot snapshot, SnapshotId id);
    /// Marks the retained snapshot with `id` accepted.
    void accept_snapshot(const SnapshotId& id);
    /// Keeps only the newest accepted snapshot plus any newer candidate.
    void retire_old_snapshot();
    /// Drops unaccepted snapshots above `height` (their pulse was reorged out).
    void drop_candidates_above(std::uint32_t height);
    /// Installs an externally verified snapshot as accepted (bootstrap).
    void install_accepted(Snapshot snapshot, SnapshotId id);

    StorageReport storage_report() const;

    std::optional<std::uint32_t> tip_height() const;
    std::uint32_t prune_height() const { return prune_height_; }
    bool archival() const { return archival_; }
    bool has_body(std::uint32_t height) const { return bodies_.contains(height); }
    const Block* body(std::uint32_t height) const;
    const std::vector<PersistedBlockMeta>& metas() const { return metas_; }
    const std::map<std::uint32_t, Block>& bodies() const { return bodies_; }
    const std::vector<StoredSnapshot>& snapshots() const { return snapshots_; }
    const StoredSnapshot* accepted_snapshot() const;
    const StoredSnapshot* find_snapshot(const SnapshotId& id) const;

    const UtxoSet& utxo() const { return utxo_; }
    UtxoSet& utxo() { return utxo_; }

    /// metas.bin, bodies/NNNNNNNN.blk and one .cpsnap per retained snapshot.
    void persist(const std::filesystem::path& dir) const;
    /// Restores metas and bodies written by persist(). UTXO and snapshots
    /// are left for the caller to re-derive or re-verify.
    static NodeStore load_metas_and_bodies(const std::filesystem::path& dir, bool archival = false);

private:
    void push_meta(const BlockHeader& header, std::uint32_t height, std::uint32_t tx_count);

    bool archival_;
    std::vector<PersistedBlockMeta> metas_;
    std::map<std::uint32_t, Block> bodies_;
    std::map<std::uint32_t, std::size_t> body_sizes_;
    std::vector<StoredSnapshot> snapshots_;
    std::uint32_t prune_height_ = 0;
    UtxoSet utxo_;
};

}  // namespace coinprune
