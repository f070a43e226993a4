#include "coinprune/prune_store.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>

namespace coinprune {

Bytes serialize_meta(const PersistedBlockMeta& m) {
    if (m.cumulative_work > std::numeric_limits<std::uint64_t>::max())
        throw std::overflow_error("cumulative work exceeds the 8-byte meta field");
    Writer w(PersistedBlockMeta::kRecordSize);
    w.hash(m.block_id);
    write_header(w, m.header);
    w.u32(m.height);
    w.u64(m.cumulative_work.convert_to<std::uint64_t>());
    w.u32(m.tx_count);
    w.u32(m.timestamp);
    return w.take();
}

PersistedBlockMeta parse_meta(ByteView record) {
    Reader r(record);
    PersistedBlockMeta m;
    m.block_id = r.hash();
    m.header = read_header(r);
    m.height = r.u32();
    m.cumulative_work = r.u64();
    m.tx_count = r.u32();
    m.timestamp = r.u32();
    r.expect_done("meta record");
    return m;
}

void NodeStore::push_meta(const BlockHeader& header, std::uint32_t height, std::uint32_t tx_count) {
    const std::uint32_t expected = metas_.empty() ? 0 : metas_.back().height + 1;
    if (height != expected)
        throw StoreError(StoreError::Kind::NonContiguous,
                         "record at height " + std::to_string(height) + ", expected " + std::to_string(expected));
    PersistedBlockMeta m;
    m.block_id = block_id(header);
    if (!metas_.empty() && header.prev_id != metas_.back().block_id)
        throw StoreError(StoreError::Kind::NonContiguous, "block at height " + std::to_string(height) + " does not extend tip");
    m.header = header;
    m.height = height;
    m.cumulative_work = (metas_.empty() ? Work(0) : metas_.back().cumulative_work) + work_from_bits(header.bits);
    m.tx_count = tx_count;
    m.timestamp = header.timestamp;
    metas_.push_back(std::move(m));
}

void NodeStore::record_block(const Block& block, std::uint32_t height) {
    push_meta(block.header, height, static_cast<std::uint32_t>(block.transactions.size()));
    if (bodies_.empty()) prune_height_ = height;
    bodies_.emplace(height, block);
    body_sizes_.emplace(height, serialize_block(block).size());
}

void NodeStore::record_header(const BlockHeader& header, std::uint32_t height, std::uint32_t tx_count) {
    if (!bodies_.empty())
        throw StoreError(StoreError::Kind::NonContiguous, "header-only record above stored bodies");
    push_meta(header, height, tx_count);
    prune_height_ = height + 1;
}

void NodeStore::truncate_above(std::uint32_t height) {
    const auto tip = tip_height();
    if (!tip || *tip <= height) return;
    if (height + 1 < prune_height_)
        throw StoreError(StoreError::Kind::FatalReorg,
                         "reorg to height " + std::to_string(height) + " crosses prune height " + std::to_string(prune_height_));
    metas_.resize(height + 1);
    bodies_.erase(bodies_.upper_bound(height), bodies_.end());
    body_sizes_.erase(body_sizes_.upper_bound(height), body_sizes_.end());
    drop_candidates_above(height);
}

void NodeStore::prune_below(std::uint32_t height) {
    const StoredSnapshot* acc = accepted_snapshot();
    if (acc == nullptr) throw StoreError(StoreError::Kind::NoAcceptedSnapshot, "cannot prune without an accepted snapshot");
    if (height > acc->snapshot.header.height + 1)
        throw StoreError(StoreError::Kind::BeyondSnapshot,
                         "prune height " + std::to_string(height) + " beyond accepted snapshot " +
                             std::to_string(acc->snapshot.header.height) + " + 1");
    if (archival_ || height <= prune_height_) return;
    bodies_.erase(bodies_.begin(), bodies_.lower_bound(height));
    body_sizes_.erase(body_sizes_.begin(), body_sizes_.lower_bound(height));
    prune_height_ = height;
}

void NodeStore::add_candidate(Snapshot snapshot, SnapshotId id) {
    if (find_snapshot(id) != nullptr) return;
    // Any unaccepted candidate is superseded by the newer one.
    std::erase_if(snapshots_, [](const StoredSnapshot& s) { return !s.accepted; });
    snapshots_.push_back({std::move(snapshot), id, false});
}

void NodeStore::accept_snapshot(const SnapshotId& id) {
    for (auto& s : snapshots_)
        if (s.id == id) {
            s.accepted = true;
            return;
        }
    throw StoreError(StoreError::Kind::UnknownSnapshot, "no retained snapshot " + id.hex());
}

void NodeStore::retire_old_snapshot() {
    const StoredSnapshot* newest = accepted_snapshot();
    if (newest == nullptr) return;
    const auto keep_height = newest->snapshot.header.height;
    std::erase_if(snapshots_, [&](const StoredSnapshot& s) { return s.snapshot.header.height < keep_height; });
}

void NodeStore::drop_candidates_above(std::uint32_t height) {
    std::erase_if(snapshots_, [&](const StoredSnapshot& s) { return !s.accepted && s.snapshot.header.height > height; });
}

void NodeStore::install_accepted(Snapshot snapshot, SnapshotId id) {
    snapshots_.clear();
    snapshots_.push_back({std::move(snapshot), id, true});
}

StorageReport NodeStore::storage_report() const {
    StorageReport r;
    for (const auto& [h, size] : body_sizes_) r.bytes_bodies += size;
    r.bytes_metas = metas_.size() * PersistedBlockMeta::kRecordSize;
    for (const auto& s : snapshots_) r.bytes_snapshot += snapshot_file_size(s.snapshot);
    r.bytes_utxo = serialized_utxo_size(utxo_);
    return r;
}

std::optional<std::uint32_t> NodeStore::tip_height() const {
    if (metas_.empty()) return std::nullopt;
    return metas_.back().height;
}

const Block* NodeStore::body(std::uint32_t height) const {
    auto it = bodies_.find(height);
    return it == bodies_.end() ? nullptr : &it->second;
}

const StoredSnapshot* NodeStore::accepted_snapshot() const {
    const StoredSnapshot* best = nullptr;
    for (const auto& s : snapshots_)
        if (s.accepted && (best == nullptr || s.snapshot.header.height > best->snapshot.header.height)) best = &s;
    return best;
}

const StoredSnapshot* NodeStore::find_snapshot(const SnapshotId& id) const {
    for (const auto& s : snapshots_)
        if (s.id == id) return &s;
    return nullptr;
}

namespace {

void write_file(const std::filesystem::path& path, const Bytes& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) throw StoreError(StoreError::Kind::Io, "failed to write " + path.string());
}

Bytes read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StoreError(StoreError::Kind::Io, "failed to open " + path.string());
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::string body_name(std::uint32_t height) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%08u.blk", height);
    return buf;
}

}  // namespace

void NodeStore::persist(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir / "bodies");
    Bytes metas;
    metas.reserve(metas_.size() * PersistedBlockMeta::kRecordSize);
    for (const auto& m : metas_) {
        const Bytes rec = serialize_meta(m);
        metas.insert(metas.end(), rec.begin(), rec.end());
    }
    write_file(dir / "metas.bin", metas);
    for (const auto& [h, b] : bodies_) write_file(dir / "bodies" / body_name(h), serialize_block(b));
    for (const auto& s : snapshots_)
        write_file(dir / (s.id.hex() + (s.accepted ? ".accepted" : ".candidate") + ".cpsnap"), write_snapshot_file(s.snapshot));
}

NodeStore NodeStore::load_metas_and_bodies(const std::filesystem::path& dir, bool archival) {
    NodeStore store(archival);
    const Bytes metas = read_file(dir / "metas.bin");
    if (metas.size() % PersistedBlockMeta::kRecordSize != 0)
        throw StoreError(StoreError::Kind::Io, "metas.bin is not a whole number of records");
    for (std::size_t off = 0; off < metas.size(); off += PersistedBlockMeta::kRecordSize)
        store.metas_.push_back(parse_meta(ByteView(metas).subspan(off, PersistedBlockMeta::kRecordSize)));
    for (const auto& m : store.metas_) {
        const auto path = dir / "bodies" / body_name(m.height);
        if (!std::filesystem::exists(path)) continue;
        const Bytes raw = read_file(path);
        store.bodies_.emplace(m.height, deserialize_block(raw));
        store.body_sizes_.emplace(m.height, raw.size());
    }
    store.prune_height_ = store.bodies_.empty() ? static_cast<std::uint32_t>(store.metas_.size()) : store.bodies_.begin()->first;
    return store;
}

}  // namespace coinprune
