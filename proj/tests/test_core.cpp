#include <gtest/gtest.h>

#include <json.hpp>
#include <random>

#include "coinprune/chain.hpp"
#include "coinprune/genesis.hpp"
#include "coinprune/kernels.hpp"
#include "coinprune/validation.hpp"
#include "support.hpp"

using namespace coinprune;
using namespace coinprune::testing;

namespace {

Hash256 H(const char* hex) { return Hash256::from_hex(hex).value(); }

Transaction spend(const OutPoint& op, std::uint32_t key, std::vector<TxOutput> outs) {
    Transaction tx;
    tx.inputs.push_back({op, wallet_secret(key)});
    tx.outputs = std::move(outs);
    return tx;
}

}  // namespace

TEST(Hash, KnownDigests) {
    EXPECT_EQ(hash256("").hex(), "5df6e0e2761359d30a8275058e299fcc0381534545f55cf43e41983f5d4c9456");
    EXPECT_EQ(hash256("abc").hex(), "4f8b42c22dd3729b519ba6f68d2da7cc5b2d606d05daed5ad5128cc03e6c6358");
}

TEST(Hash, HexParsingIsStrict) {
    EXPECT_FALSE(Hash256::from_hex("00"));
    EXPECT_FALSE(Hash256::from_hex(std::string(64, 'A')));
    EXPECT_TRUE(Hash256::from_hex(std::string(64, 'a')));
    EXPECT_FALSE(parse_hex("abc"));
    EXPECT_FALSE(parse_hex("zz"));
    EXPECT_EQ(to_hex(parse_hex("00FFa1").value()), "00ffa1");
}

TEST(Serialize, ReaderRejectsOverrun) {
    Writer w;
    w.u32(7);
    Reader r(w.data());
    EXPECT_EQ(r.u32(), 7u);
    EXPECT_THROW(r.u8(), DecodeError);
}

TEST(Merkle, MatchesOracle) {
    const Hash256 a = hash256("a"), b = hash256("b"), c = hash256("c");
    const std::vector<Hash256> ab{a, b}, abc{a, b, c}, one{a};
    EXPECT_EQ(merkle_root(ab).hex(), "b767a3a12f5f8bb1949d163c51f9a42e6bda8dcd02d50353717f73d4338b1bf0");
    EXPECT_EQ(merkle_root(abc).hex(), "74449b8328cb6e97d305adb2fca5e90993fdf9c667fa40cb625f40508da40cbf");
    EXPECT_EQ(merkle_root(one), a);
    EXPECT_THROW(merkle_root(std::vector<Hash256>{}), ChainError);
}

TEST(Header, ZeroHeaderId) {
    EXPECT_EQ(block_id(BlockHeader{0, {}, {}, 0, 0, 0}).hex(),
              "4be7570e8f70eb093640c8468274ba759745a7aa2b7d25ab1e0421b259845014");
    EXPECT_EQ(serialize_header(BlockHeader{}).size(), 80u);
}

TEST(Work, CompactTargets) {
    EXPECT_EQ(work_from_bits(0x2000ffff), Work(256));
    EXPECT_EQ(3 * work_from_bits(0x2000ffff), Work(768));
    EXPECT_EQ(work_from_bits(0x1d00ffff), Work(4295032833ull));
    EXPECT_THROW(target_from_bits(0x00000000), ChainError);
    EXPECT_THROW(target_from_bits(0x04800000), ChainError);   // sign bit
    EXPECT_THROW(target_from_bits(0x2200ffff), ChainError);   // too large
}

TEST(Codec, BlockRoundTrip) {
    const ChainParams params;
    Block b = build_block(hash256("p"), 5, params, SnapshotId{hash256("s")},
                          {spend({hash256("t"), 1}, 3, {{10, wallet_script(1)}, {20, wallet_script(2)}})});
    const Bytes wire = serialize_block(b);
    EXPECT_EQ(deserialize_block(wire), b);
    Bytes trailing = wire;
    trailing.push_back(0);
    EXPECT_THROW(deserialize_block(trailing), DecodeError);
}

TEST(Codec, UtxoStreamRoundTripAndOrdering) {
    UtxoSet u;
    for (std::uint32_t i = 0; i < 20; ++i) u[{hash256(std::to_string(i)), i % 3}] = {i * 7ull, wallet_script(i), i, i == 0};
    const Bytes s = serialize_utxo(u);
    EXPECT_EQ(s.size(), serialized_utxo_size(u));
    EXPECT_EQ(parse_utxo_stream(s), u);
}

TEST(Genesis, MatchesFixture) {
    const auto fx = nlohmann::json::parse(read_text(fixture_path("genesis.json")));
    const ChainParams params;
    const Block g = make_genesis(params);
    EXPECT_EQ(g.header.nonce, fx["nonce"].get<std::uint32_t>());
    EXPECT_EQ(block_id(g.header).hex(), fx["block_id"].get<std::string>());
    EXPECT_EQ(txid(g.transactions[0]).hex(), fx["coinbase_txid"].get<std::string>());
    EXPECT_EQ(g.transactions[0].outputs.size(), fx["genesis_outputs"].get<std::size_t>());
    EXPECT_NO_THROW(check_block(g, params));
}

TEST(Validation, SpendRules) {
    const ChainParams params;
    const Block g = make_genesis(params);
    UtxoSet base = apply_block({}, g, 0, params);
    const Hash256 gtx = txid(g.transactions[0]);
    const std::uint64_t v = params.subsidy / kGenesisOutputs;
    const Hash256 gid = block_id(g.header);

    auto expect_kind = [&](const Block& b, ChainError::Kind kind) {
        UtxoSet u = base;
        try {
            apply_block_in_place(u, b, 1, params);
            ADD_FAILURE() << "block was accepted";
        } catch (const ChainError& e) {
            EXPECT_EQ(e.kind(), kind) << e.what();
        }
        EXPECT_EQ(u, base) << "failed apply must leave the set untouched";
    };

    // Valid spend with a fee.
    Block ok = build_block(gid, 1, params, std::nullopt, {spend({gtx, 4}, 4, {{v - 100, wallet_script(9)}})}, 100);
    UtxoSet u = apply_block(base, ok, 1, params);
    EXPECT_FALSE(u.contains({gtx, 4}));
    EXPECT_EQ(u.size(), base.size() + 1);

    expect_kind(build_block(gid, 1, params, std::nullopt, {spend({gtx, 4}, 5, {{v, wallet_script(9)}})}),
                ChainError::Kind::BadWitness);
    expect_kind(build_block(gid, 1, params, std::nullopt, {spend({gtx, 4}, 4, {{v + 1, wallet_script(9)}})}),
                ChainError::Kind::OverSpend);
    expect_kind(build_block(gid, 1, params, std::nullopt, {spend({gtx, 99}, 4, {{1, wallet_script(9)}})}),
                ChainError::Kind::MissingInput);
    expect_kind(build_block(gid, 1, params, std::nullopt, {spend({gtx, 4}, 4, {{v, wallet_script(9)}})}, 1),
                ChainError::Kind::OverSubsidy);
}

TEST(Validation, StructuralChecks) {
    const ChainParams params;
    Block b = build_block(hash256("p"), 1, params);
    EXPECT_NO_THROW(check_block(b, params));
    Block bad = b;
    bad.header.merkle_root = hash256("x");
    EXPECT_THROW(check_block(bad, params), ChainError);
    Block big = b;
    big.transactions[0].coinbase_data = Bytes(101, 0);
    big.header.merkle_root = block_merkle_root(big);
    grind_nonce(big.header);
    EXPECT_THROW(check_block(big, params), ChainError);
    // Arbitrary coinbase data is never a reason to reject.
    Block junk = b;
    junk.transactions[0].coinbase_data = Bytes(100, 0xCB);
    junk.header.merkle_root = block_merkle_root(junk);
    grind_nonce(junk.header);
    EXPECT_NO_THROW(check_block(junk, params));
}

TEST(Validation, HeaderChainAndForkChoice) {
    const ChainParams params;
    const Block g = make_genesis(params);
    std::vector<BlockHeader> hs{g.header};
    for (std::uint32_t h = 1; h <= 3; ++h) hs.push_back(build_block(block_id(hs.back()), h, params).header);
    EXPECT_EQ(validate_header_chain(hs, block_id(g.header)), 4 * work_from_bits(params.bits));
    auto broken = hs;
    broken[2].prev_id = hash256("nope");
    EXPECT_THROW(validate_header_chain(broken, block_id(g.header)), ChainError);

    const std::vector<TipCandidate> c{{hash256("a"), 10, 5}, {hash256("b"), 12, 9}, {hash256("c"), 12, 7}};
    EXPECT_EQ(fork_choice(c), hash256("c"));
}

TEST(Kernels, OmpMatchesSerial) {
    std::mt19937_64 rng(3);
    std::vector<Bytes> items(333);
    for (auto& it : items) {
        it.resize(rng() % 400);
        for (auto& b : it) b = static_cast<std::uint8_t>(rng());
    }
    std::vector<ByteView> views(items.begin(), items.end());
    const auto ref = kernels::serial::hash_each(views);
    EXPECT_EQ(kernels::omp::hash_each(views), ref);
    EXPECT_EQ(kernels::hash_each(views), ref);
    for (std::size_t i = 0; i < items.size(); ++i) EXPECT_EQ(ref[i], hash256(items[i]));
}
