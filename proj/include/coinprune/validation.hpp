#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>

#include "coinprune/chain.hpp"

namespace coinprune {

/// Unbounded chain work.
using Work = boost::multiprecision::cpp_int;

struct ChainParams {
    std::uint32_t bits = 0x2000ffff;
    std::uint64_t subsidy = 5'000'000'000;
    std::uint64_t max_money = 2'100'000'000'000'000;
};

class ChainError : public std::runtime_error {
public:
    enum class Kind {
        EmptyMerkle,
        MalformedBits,
        BrokenLink,
        WrongGenesis,
        PowViolation,
        BadStructure,
        MissingInput,
        BadWitness,
        ValueOverflow,
        OverSpend,
        OverSubsidy,
        DuplicateOutput,
    };

    ChainError(Kind kind, std::string what, std::optional<std::uint32_t> height = std::nullopt)
        : std::runtime_error(height ? what + " at height " + std::to_string(*height) : what),
          kind_(kind),
          height_(height) {}

    Kind kind() const { return kind_; }
    std::optional<std::uint32_t> height() const { return height_; }

private:
    Kind kind_;
    std::optional<std::uint32_t> height_;
};

/// Bitcoin-style binary tree; odd levels duplicate their last node.
Hash256 merkle_root(std::span<const Hash256> txids);
std::vector<Hash256> block_txids(const Block& block);
Hash256 block_merkle_root(const Block& block);

/// Decodes a compact target. Negative, zero, or >= 2^256 targets throw.
Work target_from_bits(std::uint32_t bits);
/// floor(2^256 / (target + 1)).
Work work_for_target(const Work& target);
Work work_from_bits(std::uint32_t bits);
/// Interprets the id as a little-endian 256-bit integer.
bool meets_target(const Hash256& id, std::uint32_t bits);

/// Structure only: size bound, coinbase placement, transaction shape,
/// Merkle commitment and proof of work. Does not look at the UTXO set and
/// never inspects coinbase_data contents.
void check_block(const Block& block, const ChainParams& params);

/// Checks links back to `genesis_id` and per-header PoW; returns summed work.
Work validate_header_chain(std::span<const BlockHeader> headers, const Hash256& genesis_id);

/// Spends and creates outputs. Strong guarantee: on error `utxo` is untouched.
void apply_block_in_place(UtxoSet& utxo, const Block& block, std::uint32_t height, const ChainParams& params);
UtxoSet apply_block(const UtxoSet& utxo, const Block& block, std::uint32_t height, const ChainParams& params);

struct TipCandidate {
    Hash256 id;
    Work work;
    std::uint64_t arrival = 0;
};

/// Most work wins; ties go to the earliest arrival.
Hash256 fork_choice(std::span<const TipCandidate> candidates);

}  // namespace coinprune
