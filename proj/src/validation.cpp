#include "coinprune/validation.hpp"

#include <algorithm>
#include <set>

#include "coinprune/kernels.hpp"

namespace coinprune {

namespace {

const Work kTwoTo256 = Work(1) << 256;

Work id_as_number(const Hash256& id) {
    Work v = 0;
    const auto& b = id.bytes();
    for (int i = static_cast<int>(Hash256::kSize) - 1; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
    return v;
}

bool checked_add(std::uint64_t& acc, std::uint64_t v, std::uint64_t limit) {
    if (v > limit || acc > limit - v) return false;
    acc += v;
    return true;
}

void check_transaction_shape(const Transaction& tx, bool first, const ChainParams& params, std::uint32_t index) {
    const std::string where = "transaction " + std::to_string(index);
    if (first) {
        if (!tx.is_coinbase()) throw ChainError(ChainError::Kind::BadStructure, where + ": first transaction must be coinbase");
        if (!tx.coinbase_data) throw ChainError(ChainError::Kind::BadStructure, where + ": coinbase lacks coinbase_data");
        if (tx.coinbase_data->size() > kMaxCoinbaseData)
            throw ChainError(ChainError::Kind::BadStructure, where + ": coinbase_data exceeds 100 bytes");
    } else {
        if (tx.is_coinbase()) throw ChainError(ChainError::Kind::BadStructure, where + ": unexpected coinbase");
        if (tx.coinbase_data) throw ChainError(ChainError::Kind::BadStructure, where + ": coinbase_data on regular transaction");
    }
    if (tx.outputs.empty()) throw ChainError(ChainError::Kind::BadStructure, where + ": no outputs");
    std::uint64_t total = 0;
    for (const auto& out : tx.outputs) {
        if (out.script.size() > kMaxScriptSize) throw ChainError(ChainError::Kind::BadStructure, where + ": script too long");
        if (!checked_add(total, out.value, params.max_money))
            throw ChainError(ChainError::Kind::ValueOverflow, where + ": output value exceeds money supply");
    }
}

}  // namespace

Hash256 merkle_root(std::span<const Hash256> txids) {
    if (txids.empty()) throw ChainError(ChainError::Kind::EmptyMerkle, "merkle root of empty list");
    std::vector<Hash256> level(txids.begin(), txids.end());
    Bytes pair(2 * Hash256::kSize);
    while (level.size() > 1) {
        if (level.size() % 2 != 0) level.push_back(level.back());
        std::vector<Hash256> next;
        next.reserve(level.size() / 2);
        for (std::size_t i = 0; i < level.size(); i += 2) {
            std::copy(level[i].bytes().begin(), level[i].bytes().end(), pair.begin());
            std::copy(level[i + 1].bytes().begin(), level[i + 1].bytes().end(), pair.begin() + Hash256::kSize);
            next.push_back(hash256(pair));
        }
        level = std::move(next);
    }
    return level.front();
}

std::vector<Hash256> block_txids(const Block& block) {
    std::vector<Bytes> raw;
    raw.reserve(block.transactions.size());
    for (const auto& tx : block.transactions) raw.push_back(serialize_transaction(tx));
    std::vector<ByteView> views(raw.begin(), raw.end());
    return kernels::hash_each(views);
}

Hash256 block_merkle_root(const Block& block) { return merkle_root(block_txids(block)); }

Work target_from_bits(std::uint32_t bits) {
    const std::uint32_t exponent = bits >> 24;
    const std::uint32_t mantissa = bits & 0x007fffff;
    if ((bits & 0x00800000) != 0 && mantissa != 0)
        throw ChainError(ChainError::Kind::MalformedBits, "negative compact target");
    Work target = mantissa;
    if (exponent <= 3)
        target >>= 8 * (3 - exponent);
    else
        target <<= 8 * (exponent - 3);
    if (target == 0) throw ChainError(ChainError::Kind::MalformedBits, "zero compact target");
    if (target >= kTwoTo256) throw ChainError(ChainError::Kind::MalformedBits, "compact target overflows 256 bits");
    return target;
}

Work work_for_target(const Work& target) {
    if (target <= 0 || target >= kTwoTo256) throw ChainError(ChainError::Kind::MalformedBits, "target out of range");
    return kTwoTo256 / (target + 1);
}

Work work_from_bits(std::uint32_t bits) { return work_for_target(target_from_bits(bits)); }

bool meets_target(const Hash256& id, std::uint32_t bits) { return id_as_number(id) <= target_from_bits(bits); }

void check_block(const Block& block, const ChainParams& params) {
    if (block.transactions.empty()) throw ChainError(ChainError::Kind::BadStructure, "block has no transactions");
    Writer sizer;
    write_block(sizer, block);
    if (sizer.size() > kMaxBlockSize) throw ChainError(ChainError::Kind::BadStructure, "block exceeds 1 MiB");
    for (std::size_t i = 0; i < block.transactions.size(); ++i)
        check_transaction_shape(block.transactions[i], i == 0, params, static_cast<std::uint32_t>(i));
    if (block_merkle_root(block) != block.header.merkle_root)
        throw ChainError(ChainError::Kind::BadStructure, "merkle root mismatch");
    if (block.header.bits != params.bits) throw ChainError(ChainError::Kind::PowViolation, "unexpected difficulty bits");
    if (!meets_target(block_id(block.header), block.header.bits))
        throw ChainError(ChainError::Kind::PowViolation, "block id above target");
}

Work validate_header_chain(std::span<const BlockHeader> headers, const Hash256& genesis_id) {
    if (headers.empty()) throw ChainError(ChainError::Kind::WrongGenesis, "empty header chain", 0);
    Work total = 0;
    Hash256 prev;
    for (std::size_t i = 0; i < headers.size(); ++i) {
        const auto height = static_cast<std::uint32_t>(i);
        const Hash256 id = block_id(headers[i]);
        if (i == 0) {
            if (id != genesis_id) throw ChainError(ChainError::Kind::WrongGenesis, "genesis mismatch", height);
        } else if (headers[i].prev_id != prev) {
            throw ChainError(ChainError::Kind::BrokenLink, "prev_id does not match predecessor", height);
        }
        Work target;
        try {
            target = target_from_bits(headers[i].bits);
        } catch (const ChainError& e) {
            throw ChainError(ChainError::Kind::MalformedBits, e.what(), height);
        }
        if (id_as_number(id) > target) throw ChainError(ChainError::Kind::PowViolation, "block id above target", height);
        total += work_for_target(target);
        prev = id;
    }
    return total;
}

void apply_block_in_place(UtxoSet& utxo, const Block& block, std::uint32_t height, const ChainParams& params) {
    if (block.transactions.empty() || !block.transactions.front().is_coinbase())
        throw ChainError(ChainError::Kind::BadStructure, "first transaction must be coinbase", height);

    const auto txids = block_txids(block);
    // Outputs created earlier in this block may be spent later in it.
    UtxoSet created;
    std::set<OutPoint> spent;
    std::uint64_t fees = 0;

    auto add_outputs = [&](std::size_t t, bool coinbase) {
        const auto& tx = block.transactions[t];
        for (std::uint32_t v = 0; v < tx.outputs.size(); ++v) {
            OutPoint op{txids[t], v};
            if ((utxo.contains(op) && !spent.contains(op)) || created.contains(op))
                throw ChainError(ChainError::Kind::DuplicateOutput, "output " + op.txid.hex() + " already unspent", height);
            created.emplace(op, TxOut{tx.outputs[v].value, tx.outputs[v].script, height, coinbase});
        }
    };

    for (std::size_t t = 1; t < block.transactions.size(); ++t) {
        const auto& tx = block.transactions[t];
        if (tx.is_coinbase()) throw ChainError(ChainError::Kind::BadStructure, "second coinbase", height);
        std::uint64_t in_total = 0;
        for (const auto& in : tx.inputs) {
            const TxOut* prev = nullptr;
            if (auto it = created.find(in.prevout); it != created.end()) {
                prev = &it->second;
            } else if (auto jt = utxo.find(in.prevout); jt != utxo.end() && !spent.contains(in.prevout)) {
                prev = &jt->second;
            }
            if (prev == nullptr)
                throw ChainError(ChainError::Kind::MissingInput,
                                 "input " + in.prevout.txid.hex() + ":" + std::to_string(in.prevout.vout) +
                                     " missing or already spent",
                                 height);
            if (key_id(in.witness) != prev->script)
                throw ChainError(ChainError::Kind::BadWitness, "witness does not unlock script", height);
            if (!checked_add(in_total, prev->value, params.max_money))
                throw ChainError(ChainError::Kind::ValueOverflow, "input sum overflow", height);
            if (created.erase(in.prevout) == 0) spent.insert(in.prevout);
        }
        std::uint64_t out_total = 0;
        for (const auto& out : tx.outputs)
            if (!checked_add(out_total, out.value, params.max_money))
                throw ChainError(ChainError::Kind::ValueOverflow, "output sum overflow", height);
        if (out_total > in_total) throw ChainError(ChainError::Kind::OverSpend, "outputs exceed inputs", height);
        fees += in_total - out_total;
        add_outputs(t, false);
    }

    std::uint64_t minted = 0;
    for (const auto& out : block.transactions.front().outputs)
        if (!checked_add(minted, out.value, params.max_money))
            throw ChainError(ChainError::Kind::ValueOverflow, "coinbase sum overflow", height);
    if (minted > params.subsidy + fees) throw ChainError(ChainError::Kind::OverSubsidy, "coinbase exceeds subsidy plus fees", height);
    add_outputs(0, true);

    for (const auto& op : spent) utxo.erase(op);
    utxo.merge(created);
}

UtxoSet apply_block(const UtxoSet& utxo, const Block& block, std::uint32_t height, const ChainParams& params) {
    UtxoSet out = utxo;
    apply_block_in_place(out, block, height, params);
    return out;
}

Hash256 fork_choice(std::span<const TipCandidate> candidates) {
    if (candidates.empty()) throw std::invalid_argument("fork_choice needs at least one candidate");
    const TipCandidate* best = &candidates.front();
    for (const auto& c : candidates)
        if (c.work > best->work || (c.work == best->work && c.arrival < best->arrival)) best = &c;
    return best->id;
}

}  // namespace coinprune
