#include "coinprune/genesis.hpp"

#include <stdexcept>

namespace coinprune {

Bytes wallet_secret(std::uint32_t index) {
    Writer w;
    w.bytes(as_bytes("wallet"));
    w.u32(index);
    const auto h = hash256(w.data());
    return Bytes(h.view().begin(), h.view().end());
}

Bytes wallet_script(std::uint32_t index) { return key_id(wallet_secret(index)); }

Wallet::Wallet() {
    for (std::uint32_t i = 0; i < kWalletKeys; ++i) {
        auto secret = wallet_secret(i);
        scripts_.push_back(key_id(secret));
        secrets_.emplace(scripts_.back(), std::move(secret));
    }
}

const Bytes* Wallet::secret_for(const Bytes& script) const {
    auto it = secrets_.find(script);
    return it == secrets_.end() ? nullptr : &it->second;
}

std::uint64_t grind_nonce(BlockHeader& header) {
    std::uint64_t attempts = 1;
    while (!meets_target(block_id(header), header.bits)) {
        if (header.nonce == UINT32_MAX) throw std::runtime_error("nonce space exhausted");
        ++header.nonce;
        ++attempts;
    }
    return attempts;
}

Block make_genesis(const ChainParams& params) {
    Transaction cb;
    const std::uint64_t each = params.subsidy / kGenesisOutputs;
    for (std::uint32_t i = 0; i < kGenesisOutputs; ++i) cb.outputs.push_back({each, wallet_script(i % kWalletKeys)});
    Writer data;
    data.u32(0);
    data.bytes(as_bytes("genesis"));
    cb.coinbase_data = data.take();

    Block b;
    b.transactions.push_back(std::move(cb));
    b.header.version = 1;
    b.header.bits = params.bits;
    b.header.merkle_root = block_merkle_root(b);
    grind_nonce(b.header);
    return b;
}

}  // namespace coinprune
