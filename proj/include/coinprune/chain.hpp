#pragma once
// Simplified Bitcoin-like data model: headers, transactions, blocks and the
// UTXO set, together with their bit-exact little-endian codecs.
//
//   header   = version(4) prev_id(32) merkle_root(32) timestamp(4) bits(4) nonce(4)
//   outpoint = txid(32) vout(4)
//   txout    = value(8) creation_height(4) is_coinbase(1) script_len(2) script
//   entry    = outpoint txout                 (UTXO stream, snapshot chunks)
//   tx       = n_in(4) {outpoint witness_len(4) witness}
//              n_out(4) {value(8) script_len(2) script}
//              has_coinbase_data(1) [len(4) data]
//   block    = header n_tx(4) {tx}

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "coinprune/hash.hpp"
#include "coinprune/serialize.hpp"

namespace coinprune {

inline constexpr std::size_t kMaxBlockSize = 1'048'576;
inline constexpr std::size_t kMaxScriptSize = 256;
inline constexpr std::size_t kMaxCoinbaseData = 100;
inline constexpr std::size_t kKeyIdSize = 20;

struct BlockHeader {
    static constexpr std::size_t kSize = 80;

    std::int32_t version = 1;
    Hash256 prev_id;
    Hash256 merkle_root;
    std::uint32_t timestamp = 0;
    std::uint32_t bits = 0;
    std::uint32_t nonce = 0;

    bool operator==(const BlockHeader&) const = default;
};

/// Canonical order: txid bytes lexicographically, then vout.
struct OutPoint {
    Hash256 txid;
    std::uint32_t vout = 0;

    auto operator<=>(const OutPoint&) const = default;
};

/// An unspent output as held in the UTXO set.
struct TxOut {
    std::uint64_t value = 0;
    Bytes script;
    std::uint32_t creation_height = 0;
    bool is_coinbase = false;

    bool operator==(const TxOut&) const = default;
};

/// An output as carried inside a transaction; height and coinbase flag are
/// assigned when the containing block is applied.
struct TxOutput {
    std::uint64_t value = 0;
    Bytes script;

    bool operator==(const TxOutput&) const = default;
};

struct TxIn {
    OutPoint prevout;
    Bytes witness;

    bool operator==(const TxIn&) const = default;
};

struct Transaction {
    std::vector<TxIn> inputs;
    std::vector<TxOutput> outputs;
    std::optional<Bytes> coinbase_data;

    bool is_coinbase() const { return inputs.empty(); }
    bool operator==(const Transaction&) const = default;
};

struct Block {
    BlockHeader header;
    std::vector<Transaction> transactions;

    bool operator==(const Block&) const = default;
};

using UtxoSet = std::map<OutPoint, TxOut>;

// -- codecs ----------------------------------------------------------------

void write_header(Writer& w, const BlockHeader& h);
BlockHeader read_header(Reader& r);
Bytes serialize_header(const BlockHeader& h);

void write_outpoint(Writer& w, const OutPoint& o);
OutPoint read_outpoint(Reader& r);

void write_txout(Writer& w, const TxOut& o);
TxOut read_txout(Reader& r);

void write_transaction(Writer& w, const Transaction& tx);
Transaction read_transaction(Reader& r);
Bytes serialize_transaction(const Transaction& tx);

void write_block(Writer& w, const Block& b);
Block read_block(Reader& r);
Bytes serialize_block(const Block& b);
Block deserialize_block(ByteView bytes);

/// Serialized length of one UTXO entry (outpoint + txout).
std::size_t entry_size(const TxOut& out);
void write_entry(Writer& w, const OutPoint& op, const TxOut& out);
/// Concatenated entries in canonical order.
Bytes serialize_utxo(const UtxoSet& utxo);
std::size_t serialized_utxo_size(const UtxoSet& utxo);
/// Parses a back-to-back entry stream. Entries may come in any order;
/// a repeated outpoint throws DecodeError.
UtxoSet parse_utxo_stream(ByteView bytes);

// -- identifiers -----------------------------------------------------------

Hash256 block_id(const BlockHeader& h);
Hash256 txid(const Transaction& tx);

/// First 20 bytes of hash256(secret): the lock a script carries.
Bytes key_id(ByteView secret);

}  // namespace coinprune
