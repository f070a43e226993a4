#include "coinprune/snapshot.hpp"

#include "coinprune/kernels.hpp"

namespace coinprune {

Bytes serialize_snapshot_header(const SnapshotHeader& h) {
    Writer w(SnapshotHeader::kSize);
    w.u32(h.height);
    w.hash(h.block_id);
    w.u32(h.chunk_count);
    return w.take();
}

SnapshotHeader parse_snapshot_header(ByteView bytes) {
    Reader r(bytes);
    SnapshotHeader h;
    h.height = r.u32();
    h.block_id = r.hash();
    h.chunk_count = r.u32();
    r.expect_done("snapshot header");
    return h;
}

Snapshot create_snapshot(const UtxoSet& utxo, std::uint32_t height, const Hash256& block_id, std::size_t chunk_limit) {
    if (chunk_limit == 0 || chunk_limit > kMaxBlockSize)
        throw std::invalid_argument("chunk limit must be in [1, 1 MiB]");
    Snapshot snap;
    Writer current;
    for (const auto& [op, out] : utxo) {
        const std::size_t size = entry_size(out);
        if (size > chunk_limit)
            throw std::invalid_argument("chunk limit " + std::to_string(chunk_limit) + " below entry size " +
                                        std::to_string(size));
        if (current.size() > 0 && current.size() + size > chunk_limit) snap.chunks.push_back({current.take()});
        write_entry(current, op, out);
    }
    if (current.size() > 0) snap.chunks.push_back({current.take()});
    snap.header = {height, block_id, static_cast<std::uint32_t>(snap.chunks.size())};
    return snap;
}

std::vector<Hash256> chunk_hashes(const Snapshot& snapshot) {
    const Bytes header = serialize_snapshot_header(snapshot.header);
    std::vector<ByteView> items;
    items.reserve(snapshot.chunks.size() + 1);
    items.emplace_back(header);
    for (const auto& c : snapshot.chunks) items.emplace_back(c.payload);
    return kernels::hash_each(items);
}

SnapshotId snapshot_id_from_hashes(std::span<const Hash256> layer) {
    Writer w(layer.size() * Hash256::kSize);
    for (const auto& h : layer) w.hash(h);
    return {hash256(w.data())};
}

SnapshotId snapshot_id(const Snapshot& snapshot) { return snapshot_id_from_hashes(chunk_hashes(snapshot)); }

UtxoSet decode_snapshot(const Snapshot& snapshot) {
    UtxoSet out;
    const OutPoint* last = nullptr;
    for (std::size_t i = 0; i < snapshot.chunks.size(); ++i) {
        const auto& payload = snapshot.chunks[i].payload;
        if (payload.empty()) throw SnapshotError(SnapshotError::Kind::Malformed, "chunk " + std::to_string(i) + " is empty");
        Reader r(payload);
        try {
            while (!r.done()) {
                OutPoint op = read_outpoint(r);
                TxOut txo = read_txout(r);
                if (last != nullptr && !(*last < op))
                    throw SnapshotError(SnapshotError::Kind::Malformed,
                                        "entries out of order or duplicated in chunk " + std::to_string(i));
                auto it = out.emplace_hint(out.end(), op, std::move(txo));
                last = &it->first;
            }
        } catch (const DecodeError& e) {
            throw SnapshotError(SnapshotError::Kind::Malformed, "chunk " + std::to_string(i) + ": " + e.what());
        }
    }
    return out;
}

UtxoSet verify_and_apply(const Snapshot& snapshot, const SnapshotId& expected) {
    if (snapshot.header.chunk_count != snapshot.chunks.size())
        throw SnapshotError(SnapshotError::Kind::Malformed,
                            "header announces " + std::to_string(snapshot.header.chunk_count) + " chunks, found " +
                                std::to_string(snapshot.chunks.size()));
    const SnapshotId actual = snapshot_id(snapshot);
    if (actual != expected)
        throw SnapshotError(SnapshotError::Kind::Tamper,
                            "snapshot id mismatch: expected " + expected.hex() + ", computed " + actual.hex());
    return decode_snapshot(snapshot);
}

Bytes write_snapshot_file(const Snapshot& snapshot) {
    Writer w(snapshot_file_size(snapshot));
    w.bytes(serialize_snapshot_header(snapshot.header));
    for (const auto& c : snapshot.chunks) {
        w.u32(static_cast<std::uint32_t>(c.payload.size()));
        w.bytes(c.payload);
    }
    return w.take();
}

Snapshot read_snapshot_file(ByteView bytes) {
    Reader r(bytes);
    Snapshot snap;
    snap.header = parse_snapshot_header(r.bytes(SnapshotHeader::kSize));
    while (!r.done()) {
        const auto len = r.u32();
        if (len > kMaxBlockSize) throw DecodeError("chunk length " + std::to_string(len) + " exceeds 1 MiB");
        snap.chunks.push_back({r.bytes_copy(len)});
    }
    return snap;
}

std::size_t snapshot_file_size(const Snapshot& snapshot) {
    std::size_t total = SnapshotHeader::kSize;
    for (const auto& c : snapshot.chunks) total += 4 + c.payload.size();
    return total;
}

}  // namespace coinprune
