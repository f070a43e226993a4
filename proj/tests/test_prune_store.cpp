#include <gtest/gtest.h>

#include "coinprune/prune_store.hpp"
#include "support.hpp"

using namespace coinprune;
using namespace coinprune::testing;

namespace {

struct Chain {
    ChainParams params;
    std::vector<Block> blocks;
    std::vector<UtxoSet> states;

    explicit Chain(std::uint32_t length) {
        blocks.push_back(make_genesis(params));
        states.push_back(apply_block({}, blocks[0], 0, params));
        for (std::uint32_t h = 1; h <= length; ++h) {
            blocks.push_back(build_block(block_id(blocks.back().header), h, params));
            states.push_back(apply_block(states.back(), blocks.back(), h, params));
        }
    }
    Snapshot snap(std::uint32_t h) const { return create_snapshot(states[h], h, block_id(blocks[h].header)); }
};

void record(NodeStore& s, const Chain& c, std::uint32_t from, std::uint32_t to) {
    for (std::uint32_t h = from; h <= to; ++h) {
        s.record_block(c.blocks[h], h);
        s.utxo() = c.states[h];
    }
}

}  // namespace

TEST(Meta, RecordRoundTrip) {
    PersistedBlockMeta m{hash256("id"), BlockHeader{1, hash256("p"), hash256("m"), 5, 0x2000ffff, 9}, 7, 12345, 3, 5};
    const Bytes b = serialize_meta(m);
    EXPECT_EQ(b.size(), PersistedBlockMeta::kRecordSize);
    EXPECT_EQ(parse_meta(b), m);
    m.cumulative_work = Work(1) << 64;
    EXPECT_THROW(serialize_meta(m), std::overflow_error);
}

TEST(Store, PruneRequiresAcceptedSnapshot) {
    const Chain c(10);
    NodeStore s;
    record(s, c, 0, 10);
    const auto before = s.storage_report();
    EXPECT_THROW(
        {
            try {
                s.prune_below(5);
            } catch (const StoreError& e) {
                EXPECT_EQ(e.kind(), StoreError::Kind::NoAcceptedSnapshot);
                throw;
            }
        },
        StoreError);
    EXPECT_EQ(s.storage_report(), before);

    const auto snap = c.snap(4);
    const auto id = snapshot_id(snap);
    s.add_candidate(snap, id);
    EXPECT_THROW(s.prune_below(5), StoreError);  // still only a candidate
    s.accept_snapshot(id);
    EXPECT_THROW(s.prune_below(6), StoreError);  // beyond the snapshot
    s.prune_below(5);
    EXPECT_EQ(s.prune_height(), 5u);
    EXPECT_FALSE(s.has_body(4));
    EXPECT_TRUE(s.has_body(5));
    const auto after = s.storage_report();
    EXPECT_LT(after.bytes_bodies, before.bytes_bodies);
    EXPECT_EQ(after.bytes_metas, before.bytes_metas);
    EXPECT_EQ(after.bytes_metas, 11u * PersistedBlockMeta::kRecordSize);
    EXPECT_EQ(after.bytes_snapshot, snapshot_file_size(snap));

    std::uint64_t kept = 0;
    for (std::uint32_t h = 5; h <= 10; ++h) kept += serialize_block(c.blocks[h]).size();
    EXPECT_EQ(after.bytes_bodies, kept);
}

TEST(Store, ArchivalNeverPrunes) {
    const Chain c(6);
    NodeStore s(true);
    record(s, c, 0, 6);
    const auto snap = c.snap(4);
    s.add_candidate(snap, snapshot_id(snap));
    s.accept_snapshot(snapshot_id(snap));
    s.prune_below(5);
    EXPECT_EQ(s.prune_height(), 0u);
    EXPECT_TRUE(s.has_body(0));
}

TEST(Store, ReorgBelowPruneHeightIsFatal) {
    const Chain c(10);
    NodeStore s;
    record(s, c, 0, 10);
    const auto snap = c.snap(6);
    s.add_candidate(snap, snapshot_id(snap));
    s.accept_snapshot(snapshot_id(snap));
    s.prune_below(7);
    s.truncate_above(8);
    EXPECT_EQ(s.tip_height(), 8u);
    s.truncate_above(6);
    try {
        s.truncate_above(5);
        FAIL();
    } catch (const StoreError& e) {
        EXPECT_EQ(e.kind(), StoreError::Kind::FatalReorg);
    }
}

TEST(Store, SnapshotRetentionAndCandidates) {
    const Chain c(12);
    NodeStore s;
    record(s, c, 0, 12);
    const auto s4 = c.snap(4), s8 = c.snap(8), s12 = c.snap(12);
    s.add_candidate(s4, snapshot_id(s4));
    s.accept_snapshot(snapshot_id(s4));
    s.add_candidate(s8, snapshot_id(s8));
    s.accept_snapshot(snapshot_id(s8));
    s.add_candidate(s12, snapshot_id(s12));
    s.retire_old_snapshot();
    ASSERT_EQ(s.snapshots().size(), 2u);
    EXPECT_EQ(s.accepted_snapshot()->id, snapshot_id(s8));
    EXPECT_TRUE(s.find_snapshot(snapshot_id(s12)));
    s.drop_candidates_above(10);
    EXPECT_FALSE(s.find_snapshot(snapshot_id(s12)));
    EXPECT_TRUE(s.find_snapshot(snapshot_id(s8)));
}

TEST(Store, HeaderOnlyPrefixThenBodies) {
    const Chain c(6);
    NodeStore s;
    for (std::uint32_t h = 0; h <= 3; ++h) s.record_header(c.blocks[h].header, h, 1);
    EXPECT_EQ(s.prune_height(), 4u);
    const auto snap = c.snap(3);
    s.install_accepted(snap, snapshot_id(snap));
    record(s, c, 4, 6);
    EXPECT_THROW(s.record_header(c.blocks[6].header, 7, 1), StoreError);
    EXPECT_EQ(s.metas().size(), 7u);
    EXPECT_EQ(s.bodies().size(), 3u);
    EXPECT_THROW(s.record_block(c.blocks[6], 9), StoreError);  // not contiguous
}

TEST(Store, PersistAndReload) {
    const Chain c(5);
    NodeStore s;
    record(s, c, 0, 5);
    const auto dir = std::filesystem::temp_directory_path() / "coinprune_store_test";
    std::filesystem::remove_all(dir);
    s.persist(dir);
    const NodeStore r = NodeStore::load_metas_and_bodies(dir);
    EXPECT_EQ(r.metas(), s.metas());
    EXPECT_EQ(r.bodies(), s.bodies());
    EXPECT_EQ(r.storage_report().bytes_bodies, s.storage_report().bytes_bodies);
    std::filesystem::remove_all(dir);
}
