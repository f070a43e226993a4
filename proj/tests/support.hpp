#pragma once
// Shared helpers for the unit and acceptance tests.

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "coinprune/genesis.hpp"
#include "coinprune/node.hpp"
#include "coinprune/reaffirm.hpp"
#include "coinprune/serialize.hpp"
#include "coinprune/validation.hpp"

namespace coinprune::testing {

inline std::filesystem::path fixture_path(const std::string& rel) {
    return std::filesystem::path(COINPRUNE_FIXTURE_DIR) / rel;
}

inline std::filesystem::path scenario_path(const std::string& name) {
    return std::filesystem::path(COINPRUNE_SCENARIO_DIR) / name;
}

inline std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline Bytes read_hex_fixture(const std::string& rel) {
    std::string text = read_text(fixture_path(rel));
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
    return parse_hex(text).value();
}

/// Coinbase data the way miners lay it out: u32le(height), then an optional marker.
inline Bytes coinbase_data(std::uint32_t height, const std::optional<SnapshotId>& marker) {
    Writer w;
    w.u32(height);
    Bytes out = w.take();
    if (marker) {
        const Bytes m = encode_marker(*marker);
        out.insert(out.end(), m.begin(), m.end());
    }
    return out;
}

/// A ground block on `prev`; `salt` picks the reward key so sibling forks
/// never share a coinbase txid.
inline Block build_block(const Hash256& prev, std::uint32_t height, const ChainParams& params,
                         const std::optional<SnapshotId>& marker = std::nullopt, std::vector<Transaction> txs = {},
                         std::uint64_t fees = 0, std::uint32_t salt = 0) {
    Block b;
    Transaction cb;
    cb.outputs.push_back({params.subsidy + fees, wallet_script(salt)});
    cb.coinbase_data = coinbase_data(height, marker);
    b.transactions.push_back(std::move(cb));
    for (auto& tx : txs) b.transactions.push_back(std::move(tx));
    b.header.prev_id = prev;
    b.header.timestamp = height;
    b.header.bits = params.bits;
    b.header.merkle_root = block_merkle_root(b);
    grind_nonce(b.header);
    return b;
}

/// Drives a single node with no peers.
class ManualEnv final : public NodeEnv {
public:
    std::uint64_t now() const override { return now_; }
    void send(PeerId, PeerId, const p2p::Message&) override { ++sent; }
    void arm_timer(PeerId, std::uint64_t, std::uint64_t) override {}
    void disconnect(PeerId, PeerId) override {}
    void request_neighbors(PeerId) override {}

    std::uint64_t now_ = 0;
    std::uint64_t sent = 0;
};

inline NetworkParams default_network() {
    NetworkParams n;
    n.genesis = make_genesis(n.chain);
    return n;
}

}  // namespace coinprune::testing
