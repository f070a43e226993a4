#include "coinprune/chain.hpp"

#include <limits>

namespace coinprune {

void write_header(Writer& w, const BlockHeader& h) {
    w.i32(h.version);
    w.hash(h.prev_id);
    w.hash(h.merkle_root);
    w.u32(h.timestamp);
    w.u32(h.bits);
    w.u32(h.nonce);
}

BlockHeader read_header(Reader& r) {
    BlockHeader h;
    h.version = r.i32();
    h.prev_id = r.hash();
    h.merkle_root = r.hash();
    h.timestamp = r.u32();
    h.bits = r.u32();
    h.nonce = r.u32();
    return h;
}

Bytes serialize_header(const BlockHeader& h) {
    Writer w(BlockHeader::kSize);
    write_header(w, h);
    return w.take();
}

void write_outpoint(Writer& w, const OutPoint& o) {
    w.hash(o.txid);
    w.u32(o.vout);
}

OutPoint read_outpoint(Reader& r) {
    OutPoint o;
    o.txid = r.hash();
    o.vout = r.u32();
    return o;
}

namespace {

void write_script(Writer& w, const Bytes& script) {
    if (script.size() > kMaxScriptSize) throw std::length_error("script exceeds 256 bytes");
    w.u16(static_cast<std::uint16_t>(script.size()));
    w.bytes(script);
}

Bytes read_script(Reader& r) {
    const auto len = r.u16();
    if (len > kMaxScriptSize) throw DecodeError("script length " + std::to_string(len) + " exceeds 256");
    return r.bytes_copy(len);
}

std::uint32_t read_count(Reader& r, std::size_t min_item_size, const char* what) {
    const auto n = r.u32();
    // Reject counts that cannot possibly fit in the rest of the input.
    if (min_item_size > 0 && n > r.remaining() / min_item_size)
        throw DecodeError(std::string(what) + " count " + std::to_string(n) + " exceeds input");
    return n;
}

}  // namespace

void write_txout(Writer& w, const TxOut& o) {
    w.u64(o.value);
    w.u32(o.creation_height);
    w.u8(o.is_coinbase ? 1 : 0);
    write_script(w, o.script);
}

TxOut read_txout(Reader& r) {
    TxOut o;
    o.value = r.u64();
    o.creation_height = r.u32();
    const auto flag = r.u8();
    if (flag > 1) throw DecodeError("is_coinbase flag must be 0 or 1");
    o.is_coinbase = flag == 1;
    o.script = read_script(r);
    return o;
}

void write_transaction(Writer& w, const Transaction& tx) {
    w.u32(static_cast<std::uint32_t>(tx.inputs.size()));
    for (const auto& in : tx.inputs) {
        write_outpoint(w, in.prevout);
        w.u32(static_cast<std::uint32_t>(in.witness.size()));
        w.bytes(in.witness);
    }
    w.u32(static_cast<std::uint32_t>(tx.outputs.size()));
    for (const auto& out : tx.outputs) {
        w.u64(out.value);
        write_script(w, out.script);
    }
    if (tx.coinbase_data) {
        w.u8(1);
        w.u32(static_cast<std::uint32_t>(tx.coinbase_data->size()));
        w.bytes(*tx.coinbase_data);
    } else {
        w.u8(0);
    }
}

Transaction read_transaction(Reader& r) {
    Transaction tx;
    const auto n_in = read_count(r, 40, "input");
    tx.inputs.reserve(n_in);
    for (std::uint32_t i = 0; i < n_in; ++i) {
        TxIn in;
        in.prevout = read_outpoint(r);
        in.witness = r.bytes_copy(r.u32());
        tx.inputs.push_back(std::move(in));
    }
    const auto n_out = read_count(r, 10, "output");
    tx.outputs.reserve(n_out);
    for (std::uint32_t i = 0; i < n_out; ++i) {
        TxOutput out;
        out.value = r.u64();
        out.script = read_script(r);
        tx.outputs.push_back(std::move(out));
    }
    const auto flag = r.u8();
    if (flag > 1) throw DecodeError("coinbase_data flag must be 0 or 1");
    if (flag == 1) tx.coinbase_data = r.bytes_copy(r.u32());
    return tx;
}

Bytes serialize_transaction(const Transaction& tx) {
    Writer w;
    write_transaction(w, tx);
    return w.take();
}

void write_block(Writer& w, const Block& b) {
    write_header(w, b.header);
    w.u32(static_cast<std::uint32_t>(b.transactions.size()));
    for (const auto& tx : b.transactions) write_transaction(w, tx);
}

Block read_block(Reader& r) {
    Block b;
    b.header = read_header(r);
    const auto n = read_count(r, 9, "transaction");
    b.transactions.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) b.transactions.push_back(read_transaction(r));
    return b;
}

Bytes serialize_block(const Block& b) {
    Writer w;
    write_block(w, b);
    return w.take();
}

Block deserialize_block(ByteView bytes) {
    Reader r(bytes);
    Block b = read_block(r);
    r.expect_done("block");
    return b;
}

std::size_t entry_size(const TxOut& out) { return 36 + 15 + out.script.size(); }

void write_entry(Writer& w, const OutPoint& op, const TxOut& out) {
    write_outpoint(w, op);
    write_txout(w, out);
}

Bytes serialize_utxo(const UtxoSet& utxo) {
    Writer w(serialized_utxo_size(utxo));
    for (const auto& [op, out] : utxo) write_entry(w, op, out);
    return w.take();
}

std::size_t serialized_utxo_size(const UtxoSet& utxo) {
    std::size_t total = 0;
    for (const auto& [op, out] : utxo) total += entry_size(out);
    return total;
}

UtxoSet parse_utxo_stream(ByteView bytes) {
    Reader r(bytes);
    UtxoSet out;
    while (!r.done()) {
        OutPoint op = read_outpoint(r);
        TxOut txo = read_txout(r);
        if (!out.emplace(op, std::move(txo)).second)
            throw DecodeError("duplicate outpoint " + op.txid.hex() + ":" + std::to_string(op.vout));
    }
    return out;
}

Hash256 block_id(const BlockHeader& h) { return hash256(serialize_header(h)); }

Hash256 txid(const Transaction& tx) { return hash256(serialize_transaction(tx)); }

Bytes key_id(ByteView secret) {
    const Hash256 h = hash256(secret);
    return Bytes(h.bytes().begin(), h.bytes().begin() + kKeyIdSize);
}

}  // namespace coinprune
