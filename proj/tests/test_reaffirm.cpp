#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "coinprune/reaffirm.hpp"
#include "support.hpp"

using namespace coinprune;
using namespace coinprune::testing;

namespace {

SnapshotId sid(char c) { return SnapshotId{hash256(std::string(1, c))}; }

Bytes as_vec(std::string_view s) { return Bytes(s.begin(), s.end()); }

/// The acceptance rule applied literally to an explicit list of (id, count).
PulseOutcome brute_force(const std::vector<std::pair<SnapshotId, std::uint32_t>>& entries, std::uint32_t k) {
    std::uint32_t max = 0;
    for (const auto& e : entries) max = std::max(max, e.second);
    std::vector<SnapshotId> winners;
    for (const auto& e : entries)
        if (e.second == max && max > 0) winners.push_back(e.first);
    if (max < k) return PulseOutcome::invalid();
    if (winners.size() > 1) return PulseOutcome::ambiguous();
    return PulseOutcome::accepted(winners.front());
}

}  // namespace

TEST(Marker, Grammar) {
    const Bytes zero = encode_marker(SnapshotId{});
    EXPECT_EQ(zero.size(), 75u);
    EXPECT_EQ(std::string(zero.begin(), zero.end()), "CoinPrune/" + std::string(64, '0') + "/");
    const auto id = sid('x');
    EXPECT_EQ(parse_marker(encode_marker(id)), id);

    std::string upper = "CoinPrune/" + id.hex() + "/";
    std::transform(upper.begin() + 10, upper.end(), upper.begin() + 10, ::toupper);
    EXPECT_FALSE(parse_marker(as_vec(upper)));
    EXPECT_FALSE(parse_marker(as_vec("CoinPrune/" + id.hex())));        // no trailing separator
    EXPECT_FALSE(parse_marker(as_vec("coinprune/" + id.hex() + "/")));  // wrong prefix

    std::mt19937_64 rng(5);
    for (int i = 0; i < 200; ++i) {
        Bytes junk(100);
        for (auto& b : junk) b = static_cast<std::uint8_t>(rng());
        EXPECT_FALSE(parse_marker(junk));
    }
    // A broken first occurrence does not hide a later well-formed one.
    const std::string two = "CoinPrune/zz" + std::string("CoinPrune/") + id.hex() + "/";
    EXPECT_EQ(parse_marker(as_vec(two)), id);
}

TEST(Pulse, HeightsAndWindows) {
    const PulseParams big{10000, 16, 3};
    EXPECT_EQ(pulse_height_for(25000, big), 20000u);
    EXPECT_EQ(pulse_height_for(10000, big), 10000u);
    EXPECT_FALSE(pulse_height_for(999, big));
    const PulseParams p{64, 16, 3};
    EXPECT_TRUE(in_window(65, 64, p));
    EXPECT_FALSE(in_window(64, 64, p));
    EXPECT_TRUE(in_window(80, 64, p));
    EXPECT_FALSE(in_window(81, 64, p));
    EXPECT_TRUE(is_pulse(128, p));
    EXPECT_FALSE(is_pulse(0, p));
    EXPECT_THROW((PulseParams{64, 64, 3}.validate()), std::invalid_argument);
    EXPECT_THROW((PulseParams{64, 16, 0}.validate()), std::invalid_argument);
}

TEST(Pulse, TallyOverBlocks) {
    const ChainParams chain;
    const PulseParams p{64, 16, 3};
    const auto S = sid('S'), T = sid('T');
    std::vector<Block> blocks;
    std::vector<ChainBlockRef> refs;
    auto add = [&](std::uint32_t h, const std::optional<SnapshotId>& m) {
        blocks.push_back(build_block(hash256("prev"), h, chain, m));
    };
    for (std::uint32_t h = 65; h <= 69; ++h) add(h, S);
    add(70, T);
    add(71, T);
    add(72, std::nullopt);
    add(64, S);  // pulse block itself
    add(81, S);  // past the window
    // One coinbase with two markers: only the first counts.
    Block two = build_block(hash256("prev"), 73, chain);
    Bytes data = coinbase_data(73, T);
    const Bytes extra = encode_marker(S);
    data.insert(data.end(), extra.begin(), extra.end());  // tally itself does not enforce the size cap
    two.transactions[0].coinbase_data = data;
    blocks.push_back(two);
    std::vector<std::uint32_t> heights{65, 66, 67, 68, 69, 70, 71, 72, 64, 81, 73};
    for (std::size_t i = 0; i < blocks.size(); ++i) refs.push_back({heights[i], &blocks[i]});

    const auto t = tally(refs, 64, p);
    EXPECT_EQ(t.counts.at(S), 5u);
    EXPECT_EQ(t.counts.at(T), 3u);
    EXPECT_EQ(decide(t, p), PulseOutcome::accepted(S));

    // Legacy-only window.
    std::vector<ChainBlockRef> legacy{{65, &blocks[7]}};
    EXPECT_TRUE(tally(legacy, 64, p).counts.empty());
}

TEST(Pulse, DecideExamples) {
    const PulseParams p{64, 16, 3};
    const auto S = sid('S'), T = sid('T');
    EXPECT_EQ(decide({64, {{S, 5}, {T, 2}}}, p), PulseOutcome::accepted(S));
    EXPECT_EQ(decide({64, {{S, 2}}}, p), PulseOutcome::invalid());
    EXPECT_EQ(decide({64, {{S, 3}, {T, 3}}}, p), PulseOutcome::ambiguous());
    EXPECT_EQ(decide({64, {}}, p), PulseOutcome::invalid());
}

TEST(Pulse, DecideMatchesExhaustiveOracle) {
    const std::array<SnapshotId, 4> ids{sid('a'), sid('b'), sid('c'), sid('d')};
    std::size_t checked = 0;
    for (std::uint32_t k = 1; k <= 3; ++k) {
        const PulseParams p{64, 16, k};
        // Count 0 means the id is absent: covers every map with up to four ids.
        for (std::uint32_t code = 0; code < 7 * 7 * 7 * 7; ++code) {
            ReaffirmationTally t{64, {}};
            std::vector<std::pair<SnapshotId, std::uint32_t>> entries;
            std::uint32_t c = code;
            for (const auto& id : ids) {
                const std::uint32_t n = c % 7;
                c /= 7;
                if (n > 0) {
                    t.counts[id] = n;
                    entries.emplace_back(id, n);
                }
            }
            ASSERT_EQ(decide(t, p), brute_force(entries, k)) << "k=" << k << " code=" << code;
            ++checked;
        }
    }
    EXPECT_EQ(checked, 3u * 2401u);
}

TEST(Pulse, MonotoneInWinner) {
    const PulseParams p{64, 16, 3};
    std::mt19937_64 rng(9);
    for (int i = 0; i < 500; ++i) {
        ReaffirmationTally t{64, {}};
        for (char c : std::string("abcd"))
            if (rng() % 2) t.counts[sid(c)] = static_cast<std::uint32_t>(rng() % 8);
        const auto out = decide(t, p);
        if (!out.is_accepted()) continue;
        ++t.counts[*out.id];
        EXPECT_EQ(decide(t, p), out);
    }
}
