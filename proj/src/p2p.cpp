#include "coinprune/p2p.hpp"

#include <array>
#include <cstring>

namespace coinprune::p2p {

namespace {

constexpr std::array<std::string_view, 9> kNames = {"version", "verack",  "getheaders", "headers",   "getdata",
                                                    "block",   "inv",     "getstate",   "statechunk"};

void write_items(Writer& w, const std::vector<InvItem>& items) {
    w.u32(static_cast<std::uint32_t>(items.size()));
    for (const auto& it : items) {
        w.u32(static_cast<std::uint32_t>(it.kind));
        w.hash(it.hash);
    }
}

std::uint32_t read_count(Reader& r, std::size_t item_size, std::size_t limit) {
    const auto n = r.u32();
    if (n > limit || n > r.remaining() / item_size) throw CodecError("list count " + std::to_string(n) + " out of range");
    return n;
}

std::vector<InvItem> read_items(Reader& r) {
    const auto n = read_count(r, 36, kMaxInvItems);
    std::vector<InvItem> items;
    items.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        const auto kind = r.u32();
        if (kind != static_cast<std::uint32_t>(InvKind::Block) && kind != static_cast<std::uint32_t>(InvKind::State))
            throw CodecError("unknown inventory kind " + std::to_string(kind));
        items.push_back({static_cast<InvKind>(kind), r.hash()});
    }
    return items;
}

struct PayloadWriter {
    Writer& w;

    void operator()(const VersionPayload& v) const {
        w.u32(v.protocol_version);
        w.u64(v.services);
        w.u32(v.best_height);
    }
    void operator()(const Verack&) const {}
    void operator()(const GetHeaders& g) const {
        w.u32(static_cast<std::uint32_t>(g.locator.size()));
        for (const auto& h : g.locator) w.hash(h);
    }
    void operator()(const Headers& h) const {
        w.u32(static_cast<std::uint32_t>(h.entries.size()));
        for (const auto& e : h.entries) {
            write_header(w, e.header);
            w.u32(e.tx_count);
        }
    }
    void operator()(const GetData& g) const { write_items(w, g.items); }
    void operator()(const BlockMessage& b) const { write_block(w, b.block); }
    void operator()(const Inv& i) const { write_items(w, i.items); }
    void operator()(const GetState&) const {}
    void operator()(const StateChunk& c) const {
        w.hash(c.snapshot.digest);
        w.u32(c.index);
        w.bytes(c.data);
    }
};

Message read_payload(Command cmd, Reader& r) {
    switch (cmd) {
        case Command::Version: {
            VersionPayload v;
            v.protocol_version = r.u32();
            v.services = r.u64();
            v.best_height = r.u32();
            return v;
        }
        case Command::Verack: return Verack{};
        case Command::GetHeaders: {
            GetHeaders g;
            const auto n = read_count(r, 32, 101);
            for (std::uint32_t i = 0; i < n; ++i) g.locator.push_back(r.hash());
            return g;
        }
        case Command::Headers: {
            Headers h;
            const auto n = read_count(r, 84, kMaxHeadersPerMessage);
            h.entries.reserve(n);
            for (std::uint32_t i = 0; i < n; ++i) {
                HeaderEntry e;
                e.header = read_header(r);
                e.tx_count = r.u32();
                h.entries.push_back(e);
            }
            return h;
        }
        case Command::GetData: return GetData{read_items(r)};
        case Command::Block: return BlockMessage{read_block(r)};
        case Command::Inv: return Inv{read_items(r)};
        case Command::GetState: return GetState{};
        case Command::StateChunk: {
            StateChunk c;
            c.snapshot = SnapshotId{r.hash()};
            c.index = r.u32();
            c.data = r.bytes_copy(r.remaining());
            return c;
        }
    }
    throw CodecError("unreachable command");
}

}  // namespace

std::string_view command_name(Command c) { return kNames.at(static_cast<std::size_t>(c)); }

Bytes encode(const Message& message, std::uint32_t magic) {
    Writer payload;
    std::visit(PayloadWriter{payload}, message);
    if (payload.size() > kMaxPayload) throw CodecError("payload exceeds maximum size");
    Writer w(kFrameHeaderSize + payload.size());
    w.u32(magic);
    std::array<std::uint8_t, 12> cmd{};
    const auto name = command_name(command_of(message));
    std::memcpy(cmd.data(), name.data(), name.size());
    w.bytes(cmd);
    w.u32(static_cast<std::uint32_t>(payload.size()));
    w.bytes(payload.data());
    return w.take();
}

Message decode(ByteView bytes, std::uint32_t magic) {
    try {
        Reader r(bytes);
        if (r.u32() != magic) throw CodecError("bad magic");
        const auto raw_cmd = r.bytes(12);
        std::size_t len = 0;
        while (len < raw_cmd.size() && raw_cmd[len] != 0) ++len;
        for (std::size_t i = len; i < raw_cmd.size(); ++i)
            if (raw_cmd[i] != 0) throw CodecError("command not zero padded");
        const std::string_view name(reinterpret_cast<const char*>(raw_cmd.data()), len);
        std::optional<Command> cmd;
        for (std::size_t i = 0; i < kNames.size(); ++i)
            if (kNames[i] == name) cmd = static_cast<Command>(i);
        if (!cmd) throw CodecError("unknown command '" + std::string(name) + "'");
        const auto length = r.u32();
        if (length != r.remaining()) throw CodecError("length field does not match payload");
        Reader body(r.bytes(length));
        Message m = read_payload(*cmd, body);
        if (!body.done()) throw CodecError("trailing bytes in " + std::string(name) + " payload");
        return m;
    } catch (const DecodeError& e) {
        throw CodecError(std::string("truncated frame: ") + e.what());
    }
}

Inv state_inventory(const Snapshot& snapshot) {
    Inv inv;
    for (const auto& h : chunk_hashes(snapshot)) inv.items.push_back({InvKind::State, h});
    return inv;
}

std::optional<SnapshotId> advertised_snapshot(const Inv& inv) {
    std::vector<Hash256> layer;
    for (const auto& it : inv.items) {
        if (it.kind != InvKind::State) return std::nullopt;
        layer.push_back(it.hash);
    }
    if (layer.empty()) return std::nullopt;
    return snapshot_id_from_hashes(layer);
}

std::optional<StateChunk> serve_state_item(const Snapshot& snapshot, const SnapshotId& id, const Hash256& item_hash) {
    const auto layer = chunk_hashes(snapshot);
    for (std::size_t i = 0; i < layer.size(); ++i) {
        if (layer[i] != item_hash) continue;
        StateChunk c{id, static_cast<std::uint32_t>(i), {}};
        c.data = i == 0 ? serialize_snapshot_header(snapshot.header) : snapshot.chunks[i - 1].payload;
        return c;
    }
    return std::nullopt;
}

Snapshot assemble_snapshot(const std::vector<std::optional<Bytes>>& pieces) {
    if (pieces.empty() || !pieces[0]) throw CodecError("snapshot header piece missing");
    Snapshot snap;
    try {
        snap.header = parse_snapshot_header(*pieces[0]);
    } catch (const DecodeError& e) {
        throw CodecError(std::string("bad snapshot header piece: ") + e.what());
    }
    for (std::size_t i = 1; i < pieces.size(); ++i) {
        if (!pieces[i]) throw CodecError("snapshot chunk " + std::to_string(i) + " missing");
        snap.chunks.push_back({*pieces[i]});
    }
    return snap;
}

Capabilities negotiate(const VersionPayload& local, const VersionPayload& remote) {
    if (remote.protocol_version < kMinProtocolVersion)
        throw ProtocolError("peer protocol version " + std::to_string(remote.protocol_version) + " below minimum");
    Capabilities caps;
    caps.coinprune = (local.services & kNodeCoinPrune) != 0 && (remote.services & kNodeCoinPrune) != 0;
    caps.full_history = (remote.services & kNodeNetwork) != 0;
    return caps;
}

}  // namespace coinprune::p2p
