#include <gtest/gtest.h>

#include "coinprune/p2p.hpp"
#include "support.hpp"

using namespace coinprune;
using namespace coinprune::p2p;
using namespace coinprune::testing;

namespace {

const Hash256 A = hash256("a"), B = hash256("b"), C = hash256("c");

Block fixture_block() {
    Block b;
    Transaction cb;
    cb.outputs.push_back({5000, Bytes(20, 0x07)});
    cb.coinbase_data = Bytes{1, 0, 0, 0};
    Transaction sp;
    sp.inputs.push_back({{A, 1}, Bytes(32, 0x09)});
    sp.outputs = {{100, Bytes(20, 0x08)}, {200, Bytes(20, 0x06)}};
    b.transactions = {cb, sp};
    b.header = {1, A, {}, 99, 0x2000ffff, 7};
    b.header.merkle_root = block_merkle_root(b);
    return b;
}

struct WireCase {
    const char* file;
    Message message;
};

std::vector<WireCase> wire_cases() {
    return {
        {"version", VersionPayload{70001, kNodeNetwork | kNodeCoinPrune, 300}},
        {"verack", Verack{}},
        {"getheaders", GetHeaders{{A, B}}},
        {"headers", Headers{{HeaderEntry{BlockHeader{1, A, B, 1234, 0x2000ffff, 42}, 3}}}},
        {"getdata", GetData{{{InvKind::Block, A}, {InvKind::State, B}}}},
        {"block", BlockMessage{fixture_block()}},
        {"inv", Inv{{{InvKind::State, A}, {InvKind::State, B}, {InvKind::State, C}}}},
        {"getstate", GetState{}},
        {"statechunk", StateChunk{SnapshotId{C}, 1, Bytes{'c', 'h', 'u', 'n', 'k', '-', 'b', 'y', 't', 'e', 's'}}},
    };
}

}  // namespace

TEST(Wire, GoldenVectorsRoundTrip) {
    const auto cases = wire_cases();
    ASSERT_EQ(cases.size(), 9u);  // one per command
    for (const auto& c : cases) {
        SCOPED_TRACE(c.file);
        const Bytes golden = read_hex_fixture(std::string("wire/") + c.file + ".hex");
        EXPECT_EQ(encode(c.message), golden);
        EXPECT_EQ(decode(golden), c.message);
        EXPECT_EQ(encode(decode(golden)), golden);
        EXPECT_EQ(command_name(command_of(c.message)), c.file);
    }
}

TEST(Wire, RejectsMalformedFrames) {
    const Bytes good = read_hex_fixture("wire/getheaders.hex");
    EXPECT_THROW(decode(good, 0x12345678), CodecError);  // wrong magic
    Bytes longer = good;
    longer.push_back(0);
    EXPECT_THROW(decode(longer), CodecError);
    Bytes shorter(good.begin(), good.end() - 1);
    EXPECT_THROW(decode(shorter), CodecError);
    Bytes padding = good;
    padding[4 + 11] = 'x';  // non-zero command padding
    EXPECT_THROW(decode(padding), CodecError);
    Bytes unknown = read_hex_fixture("wire/verack.hex");
    unknown[4] = 'X';
    EXPECT_THROW(decode(unknown), CodecError);
    // Payload that claims more list items than it carries.
    Bytes inv = read_hex_fixture("wire/inv.hex");
    inv[kFrameHeaderSize] = 4;
    EXPECT_THROW(decode(inv), CodecError);
}

TEST(Wire, Negotiation) {
    const VersionPayload cp{kProtocolVersion, kNodeCoinPrune, 0};
    const VersionPayload legacy{kProtocolVersion, kNodeNetwork, 0};
    const VersionPayload both{kProtocolVersion, kNodeNetwork | kNodeCoinPrune, 0};
    EXPECT_EQ(negotiate(cp, both), (Capabilities{true, true}));
    EXPECT_EQ(negotiate(cp, legacy), (Capabilities{false, true}));
    EXPECT_EQ(negotiate(legacy, cp), (Capabilities{false, false}));
    EXPECT_THROW(negotiate(cp, VersionPayload{60000, kNodeNetwork, 0}), ProtocolError);
}

TEST(Wire, StateExchangeReconstructsSnapshot) {
    UtxoSet u;
    for (std::uint32_t i = 0; i < 30; ++i) u[{hash256("s" + std::to_string(i)), i}] = {i + 1ull, wallet_script(i), i, false};
    const Snapshot snap = create_snapshot(u, 128, hash256("blk"), 400);
    const SnapshotId id = snapshot_id(snap);
    ASSERT_GT(snap.chunks.size(), 2u);

    // Server side answers GETSTATE with its inventory.
    const Message getstate = decode(encode(GetState{}));
    ASSERT_TRUE(std::holds_alternative<GetState>(getstate));
    const Inv inv = std::get<Inv>(decode(encode(state_inventory(snap))));
    ASSERT_EQ(inv.items.size(), snap.chunks.size() + 1);
    const auto advertised = advertised_snapshot(inv);
    ASSERT_TRUE(advertised);
    EXPECT_EQ(*advertised, id);

    // Client asks for every piece; each STATECHUNK crosses the wire.
    const GetData req = std::get<GetData>(decode(encode(GetData{inv.items})));
    std::vector<std::optional<Bytes>> pieces(req.items.size());
    for (const auto& item : req.items) {
        ASSERT_EQ(item.kind, InvKind::State);
        const auto piece = serve_state_item(snap, id, item.hash);
        ASSERT_TRUE(piece);
        const auto got = std::get<StateChunk>(decode(encode(*piece)));
        EXPECT_EQ(got.snapshot, id);
        EXPECT_EQ(hash256(got.data), inv.items[got.index].hash);
        pieces[got.index] = got.data;
    }
    const Snapshot rebuilt = assemble_snapshot(pieces);
    EXPECT_EQ(rebuilt, snap);
    EXPECT_EQ(verify_and_apply(rebuilt, *advertised), u);

    EXPECT_FALSE(serve_state_item(snap, id, hash256("nope")));
    pieces[1].reset();
    EXPECT_THROW(assemble_snapshot(pieces), CodecError);
    EXPECT_FALSE(advertised_snapshot(Inv{}));
    EXPECT_FALSE(advertised_snapshot(Inv{{{InvKind::Block, A}}}));
}
