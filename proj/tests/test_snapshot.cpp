#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "coinprune/kernels.hpp"
#include "coinprune/snapshot.hpp"
#include "support.hpp"

using namespace coinprune;
using namespace coinprune::testing;

namespace {

// Same rows as the oracle script's fixture.
UtxoSet fixture_utxo() {
    UtxoSet u;
    for (std::uint8_t i = 0; i < 4; ++i) {
        const Bytes tag{'t', 'x', i};
        u[{hash256(tag), static_cast<std::uint32_t>(i % 3)}] = {1000ull * (i + 1), Bytes(20, 0x10 + i), i, i == 0};
    }
    return u;
}

UtxoSet random_utxo(std::mt19937_64& rng, std::size_t n) {
    UtxoSet u;
    while (u.size() < n) {
        Hash256 t;
        for (int i = 0; i < 32; ++i) t.data()[i] = static_cast<std::uint8_t>(rng());
        Bytes script(rng() % 40, 0);
        for (auto& b : script) b = static_cast<std::uint8_t>(rng());
        u[{t, static_cast<std::uint32_t>(rng() % 5)}] = {rng() % 1'000'000, script,
                                                         static_cast<std::uint32_t>(rng() % 1000), rng() % 2 == 0};
    }
    return u;
}

}  // namespace

TEST(Snapshot, FixtureMatchesOracle) {
    const auto snap = create_snapshot(fixture_utxo(), 64, hash256("pulse"), 160);
    ASSERT_EQ(snap.chunks.size(), 2u);
    EXPECT_EQ(snap.chunks[0].payload.size(), 142u);
    EXPECT_EQ(snap.chunks[1].payload.size(), 142u);
    EXPECT_EQ(snap.header.chunk_count, 2u);
    EXPECT_EQ(hash256(serialize_snapshot_header(snap.header)).hex(),
              "d37bca311cea390ad898cc5130807116a029e5172f78c5cb2b26bb18f2da46bd");
    EXPECT_EQ(snapshot_id(snap).hex(), "72a39085030c7251332bc97602564bcbd6bfc7e983edb0ab5192578932a5dbaf");
}

TEST(Snapshot, GreedyPacking) {
    // Three 56-byte entries (51 fixed bytes plus a 5-byte script), limit 120.
    UtxoSet u;
    for (std::uint32_t i = 0; i < 3; ++i) u[{hash256(std::to_string(i)), 0}] = {1, Bytes(5, 0xAB), 0, false};
    for (const auto& [op, out] : u) ASSERT_EQ(entry_size(out), 56u);
    const auto snap = create_snapshot(u, 64, {}, 120);
    ASSERT_EQ(snap.chunks.size(), 2u);
    EXPECT_EQ(snap.chunks[0].payload.size(), 112u);
    EXPECT_EQ(snap.chunks[1].payload.size(), 56u);
    EXPECT_THROW(create_snapshot(u, 64, {}, 55), std::invalid_argument);
}

TEST(Snapshot, EmptySetAndLayerIdentity) {
    const auto empty = create_snapshot({}, 64, hash256("b"));
    EXPECT_EQ(empty.header.chunk_count, 0u);
    EXPECT_EQ(chunk_hashes(empty).size(), 1u);
    EXPECT_TRUE(verify_and_apply(empty, snapshot_id(empty)).empty());

    const auto snap = create_snapshot(fixture_utxo(), 64, hash256("pulse"), 160);
    const auto layer = chunk_hashes(snap);
    ASSERT_EQ(layer.size(), 3u);
    Bytes cat;
    for (const auto& h : layer) cat.insert(cat.end(), h.view().begin(), h.view().end());
    EXPECT_EQ(hash256(cat), snapshot_id(snap).digest);
    EXPECT_EQ(snapshot_id_from_hashes(layer), snapshot_id(snap));
}

TEST(Snapshot, SwappedChunksAndCountErrors) {
    const auto snap = create_snapshot(fixture_utxo(), 64, hash256("pulse"), 160);
    const auto id = snapshot_id(snap);
    auto swapped = snap;
    std::swap(swapped.chunks[0], swapped.chunks[1]);
    EXPECT_NE(snapshot_id(swapped), id);

    auto fewer = snap;
    fewer.header.chunk_count = 1;
    try {
        verify_and_apply(fewer, id);
        FAIL();
    } catch (const SnapshotError& e) {
        EXPECT_EQ(e.kind(), SnapshotError::Kind::Malformed);
    }
    auto flipped = snap;
    flipped.chunks[0].payload[5] ^= 1;
    try {
        verify_and_apply(flipped, id);
        FAIL();
    } catch (const SnapshotError& e) {
        EXPECT_EQ(e.kind(), SnapshotError::Kind::Tamper);
    }
}

TEST(Snapshot, FileFormatRoundTrip) {
    const auto snap = create_snapshot(fixture_utxo(), 64, hash256("pulse"), 160);
    const Bytes file = write_snapshot_file(snap);
    EXPECT_EQ(file.size(), snapshot_file_size(snap));
    EXPECT_EQ(file.size(), 40u + 2 * (4 + 142));
    EXPECT_EQ(read_snapshot_file(file), snap);
    Bytes cut(file.begin(), file.end() - 1);
    EXPECT_THROW(read_snapshot_file(cut), DecodeError);
}

TEST(SnapshotProperty, RoundTripRandomSets) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const auto u = random_utxo(rng, rng() % 60);
        const std::size_t limit = 120 + rng() % 800;
        const auto snap = create_snapshot(u, 64, hash256("b"), limit);
        for (const auto& c : snap.chunks) EXPECT_LE(c.payload.size(), limit);
        EXPECT_EQ(verify_and_apply(snap, snapshot_id(snap)), u);
        EXPECT_EQ(serialize_utxo(decode_snapshot(snap)), serialize_utxo(u));
        // Equal state, equal bytes: independent derivation agrees.
        EXPECT_EQ(create_snapshot(UtxoSet(u), 64, hash256("b"), limit), snap);
    }
}

TEST(SnapshotProperty, SingleByteFlipAlwaysDetected) {
    std::mt19937_64 rng(2024);
    int cases = 0, header_cases = 0;
    for (; cases < 1500; ++cases) {
        const auto u = random_utxo(rng, 1 + rng() % 40);
        const auto snap = create_snapshot(u, static_cast<std::uint32_t>(rng() % 1000), hash256(std::to_string(cases)),
                                          100 + rng() % 600);
        const auto id = snapshot_id(snap);
        // Work on the file image so every position, header included, is reachable.
        Bytes file = write_snapshot_file(snap);
        std::vector<std::size_t> positions;  // header bytes and chunk payload bytes (not length prefixes)
        for (std::size_t i = 0; i < SnapshotHeader::kSize; ++i) positions.push_back(i);
        std::size_t off = SnapshotHeader::kSize;
        for (const auto& c : snap.chunks) {
            off += 4;
            for (std::size_t i = 0; i < c.payload.size(); ++i) positions.push_back(off + i);
            off += c.payload.size();
        }
        const std::size_t pos = positions[rng() % positions.size()];
        header_cases += pos < SnapshotHeader::kSize;
        file[pos] ^= static_cast<std::uint8_t>(1 + rng() % 255);
        const Snapshot bad = read_snapshot_file(file);
        EXPECT_THROW(verify_and_apply(bad, id), SnapshotError) << "case " << cases << " pos " << pos;
    }
    EXPECT_GE(cases, 1000);
    EXPECT_GT(header_cases, 0);
}
