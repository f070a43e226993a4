#pragma once
// Deterministic test wallet and the premined genesis block shared by every
// simulated node.

#include <cstdint>
#include <map>

#include "coinprune/chain.hpp"
#include "coinprune/validation.hpp"

namespace coinprune {

inline constexpr std::uint32_t kWalletKeys = 64;
inline constexpr std::uint32_t kGenesisOutputs = 64;

/// secret_i = hash256("wallet" || u32le(i)).
Bytes wallet_secret(std::uint32_t index);
Bytes wallet_script(std::uint32_t index);

/// script (key id) -> secret, for every wallet key.
class Wallet {
public:
    Wallet();
    const Bytes* secret_for(const Bytes& script) const;
    const Bytes& script(std::uint32_t index) const { return scripts_.at(index % kWalletKeys); }

private:
    std::vector<Bytes> scripts_;
    std::map<Bytes, Bytes> secrets_;
};

/// Coinbase-only block paying the subsidy split over kGenesisOutputs wallet
/// keys; nonce ground upward from zero.
Block make_genesis(const ChainParams& params);

/// Grinds the nonce upward from the header's current value until the id
/// meets the target. Returns the number of attempts.
std::uint64_t grind_nonce(BlockHeader& header);

}  // namespace coinprune
