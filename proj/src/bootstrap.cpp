#include "coinprune/bootstrap.hpp"

#include <algorithm>

namespace coinprune {

namespace be = bootstrap_event;
namespace ba = bootstrap_action;

std::optional<SnapshotId> choose_snapshot(const std::map<PeerId, std::optional<SnapshotId>>& advertisements) {
    std::map<SnapshotId, std::size_t> votes;
    for (const auto& [peer, id] : advertisements)
        if (id) ++votes[*id];
    for (const auto& [id, n] : votes)
        if (2 * n > advertisements.size()) return id;
    return std::nullopt;
}

std::string_view to_string(BootstrapPhase phase) {
    switch (phase) {
        case BootstrapPhase::AcquireSnapshot: return "ACQUIRE_SNAPSHOT";
        case BootstrapPhase::FetchHeaders: return "FETCH_HEADERS";
        case BootstrapPhase::FetchChaintail: return "FETCH_CHAINTAIL";
        case BootstrapPhase::Verifying: return "VERIFYING";
        case BootstrapPhase::Accepted: return "ACCEPTED";
        case BootstrapPhase::Aborted: return "ABORTED";
    }
    return "?";
}

std::vector<BootstrapAction> Bootstrap::step(const BootstrapEvent& event) {
    Actions out;
    if (finished_) return out;
    std::visit(
        [&](const auto& e) {
            using E = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<E, be::Start>) on_start(e, out);
            else if constexpr (std::is_same_v<E, be::StateAdvert>) on_advert(e, out);
            else if constexpr (std::is_same_v<E, be::ChunkArrived>) on_chunk(e, out);
            else if constexpr (std::is_same_v<E, be::HeadersArrived>) on_headers(e, out);
            else if constexpr (std::is_same_v<E, be::BlockArrived>) on_block(e, out);
            else on_timeout(e, out);
        },
        event);
    return out;
}

void Bootstrap::arm(Actions& out) { out.push_back(ba::ArmTimer{++timer_token_, config_.timeout}); }

void Bootstrap::on_start(const be::Start& e, Actions& out) {
    if (phase_ != BootstrapPhase::Aborted) return;
    ++attempt_;
    phase_ = BootstrapPhase::AcquireSnapshot;
    neighbors_.clear();
    for (PeerId p : e.neighbors)
        if (!banned_.contains(p)) neighbors_.push_back(p);
    awaiting_adverts_ = {neighbors_.begin(), neighbors_.end()};
    adverts_.clear();
    layers_.clear();
    chosen_.reset();
    advertisers_.clear();
    layer_.clear();
    pieces_.clear();
    piece_source_.clear();
    blamed_.clear();
    snapshot_.reset();
    snapshot_utxo_.clear();
    headers_.clear();
    tail_wanted_.clear();
    tail_.clear();

    if (neighbors_.empty()) {
        abort("no CoinPrune-capable neighbors", out);
        return;
    }
    for (PeerId p : neighbors_) {
        adverts_[p] = std::nullopt;
        out.push_back(ba::Send{p, p2p::GetState{}});
    }
    arm(out);
}

void Bootstrap::on_advert(const be::StateAdvert& e, Actions& out) {
    if (phase_ != BootstrapPhase::AcquireSnapshot || chosen_ || !awaiting_adverts_.erase(e.peer)) return;
    if (auto id = p2p::advertised_snapshot(e.inv)) {
        adverts_[e.peer] = id;
        auto& layer = layers_[e.peer];
        for (const auto& it : e.inv.items) layer.push_back(it.hash);
    }
    if (awaiting_adverts_.empty()) conclude_acquire(out);
}

void Bootstrap::conclude_acquire(Actions& out) {
    chosen_ = choose_snapshot(adverts_);
    if (!chosen_) {
        abort("no absolute majority among advertised snapshots", out);
        return;
    }
    for (const auto& [peer, id] : adverts_)
        if (id == chosen_) advertisers_.push_back(peer);
    layer_ = layers_.at(advertisers_.front());
    pieces_.assign(layer_.size(), std::nullopt);

    std::map<PeerId, p2p::GetData> requests;
    for (std::uint32_t i = 0; i < layer_.size(); ++i) {
        const PeerId p = advertisers_[i % advertisers_.size()];
        piece_source_[i] = p;
        requests[p].items.push_back({p2p::InvKind::State, layer_[i]});
    }
    for (auto& [peer, req] : requests) out.push_back(ba::Send{peer, std::move(req)});
    arm(out);
}

void Bootstrap::on_chunk(const be::ChunkArrived& e, Actions& out) {
    if (phase_ != BootstrapPhase::AcquireSnapshot || !chosen_ || e.chunk.snapshot != *chosen_) return;
    const auto idx = e.chunk.index;
    if (idx >= pieces_.size() || pieces_[idx] || piece_source_.at(idx) != e.peer) return;
    if (hash256(e.chunk.data) != layer_[idx]) blamed_.insert(e.peer);
    pieces_[idx] = e.chunk.data;
    if (std::all_of(pieces_.begin(), pieces_.end(), [](const auto& p) { return p.has_value(); })) finish_snapshot(out);
}

void Bootstrap::finish_snapshot(Actions& out) {
    try {
        Snapshot snap = p2p::assemble_snapshot(pieces_);
        snapshot_utxo_ = verify_and_apply(snap, *chosen_);
        snapshot_ = std::move(snap);
    } catch (const std::exception& ex) {
        // Pieces matching their advertised hash are not at fault; if none
        // mismatched, every advertiser vouched for a broken snapshot.
        const auto& culprits = blamed_.empty() ? std::set<PeerId>(advertisers_.begin(), advertisers_.end()) : blamed_;
        for (PeerId p : culprits) {
            banned_.insert(p);
            out.push_back(ba::Ban{p});
        }
        abort(std::string("snapshot rejected: ") + ex.what(), out);
        return;
    }
    phase_ = BootstrapPhase::FetchHeaders;
    header_peer_ = advertisers_.front();
    headers_.push_back({config_.genesis_header, 1});
    out.push_back(ba::Send{header_peer_, p2p::GetHeaders{{block_id(config_.genesis_header)}}});
    arm(out);
}

void Bootstrap::on_headers(const be::HeadersArrived& e, Actions& out) {
    if (phase_ != BootstrapPhase::FetchHeaders || e.peer != header_peer_) return;
    headers_.insert(headers_.end(), e.headers.entries.begin(), e.headers.entries.end());
    if (e.headers.entries.size() == p2p::kMaxHeadersPerMessage) {
        out.push_back(ba::Send{header_peer_, p2p::GetHeaders{{block_id(headers_.back().header)}}});
        arm(out);
        return;
    }

    std::vector<BlockHeader> chain;
    chain.reserve(headers_.size());
    for (const auto& h : headers_) chain.push_back(h.header);
    try {
        validate_header_chain(chain, block_id(config_.genesis_header));
        for (const auto& h : chain)
            if (h.bits != config_.chain.bits) throw ChainError(ChainError::Kind::MalformedBits, "unexpected difficulty");
    } catch (const ChainError& ex) {
        banned_.insert(header_peer_);
        out.push_back(ba::Ban{header_peer_});
        abort(std::string("header chain invalid: ") + ex.what(), out);
        return;
    }

    const std::uint32_t p = snapshot_->header.height;
    const std::uint64_t tip = chain.size() - 1;
    if (p > tip || block_id(chain[p]) != snapshot_->header.block_id) {
        abort("snapshot block is not on the header chain", out);
        return;
    }
    if (!is_pulse(p, config_.pulse)) {
        abort("snapshot height is not a pulse", out);
        return;
    }
    if (tip < static_cast<std::uint64_t>(p) + config_.pulse.delta_r + config_.decision_depth) {
        abort("reaffirmation window still open", out);
        return;
    }
    request_tail(out);
}

void Bootstrap::request_tail(Actions& out) {
    phase_ = BootstrapPhase::FetchChaintail;
    const std::uint32_t p = snapshot_->header.height;
    const std::size_t n = headers_.size() - 1 - p;
    tail_.assign(n, std::nullopt);

    std::vector<PeerId> sources;
    for (PeerId a : advertisers_)
        if (!banned_.contains(a)) sources.push_back(a);
    std::map<PeerId, p2p::GetData> requests;
    for (std::size_t i = 0; i < n; ++i) {
        const auto id = block_id(headers_[p + 1 + i].header);
        tail_wanted_[id] = static_cast<std::uint32_t>(i);
        requests[sources[i % sources.size()]].items.push_back({p2p::InvKind::Block, id});
    }
    for (auto& [peer, req] : requests) out.push_back(ba::Send{peer, std::move(req)});
    arm(out);
}

void Bootstrap::on_block(const be::BlockArrived& e, Actions& out) {
    if (phase_ != BootstrapPhase::FetchChaintail) return;
    auto it = tail_wanted_.find(block_id(e.block.header));
    if (it == tail_wanted_.end() || tail_[it->second]) return;
    tail_[it->second] = e.block;
    if (std::all_of(tail_.begin(), tail_.end(), [](const auto& b) { return b.has_value(); })) verify(out);
}

void Bootstrap::verify(Actions& out) {
    phase_ = BootstrapPhase::Verifying;
    const std::uint32_t p = snapshot_->header.height;
    UtxoSet utxo = snapshot_utxo_;
    std::vector<Block> blocks;
    blocks.reserve(tail_.size());
    try {
        for (std::size_t i = 0; i < tail_.size(); ++i) {
            const auto h = static_cast<std::uint32_t>(p + 1 + i);
            check_block(*tail_[i], config_.chain);
            apply_block_in_place(utxo, *tail_[i], h, config_.chain);
            blocks.push_back(std::move(*tail_[i]));
        }
    } catch (const ChainError& ex) {
        abort(std::string("chaintail invalid: ") + ex.what(), out);
        return;
    }

    std::vector<ChainBlockRef> refs;
    for (std::size_t i = 0; i < blocks.size(); ++i) refs.push_back({static_cast<std::uint32_t>(p + 1 + i), &blocks[i]});
    const auto outcome = decide(tally(refs, p, config_.pulse), config_.pulse);
    if (!outcome.is_accepted() || *outcome.id != *chosen_) {
        abort(std::string("pulse ") + std::to_string(p) + " outcome " + std::string(to_string(outcome.kind)) +
                  (outcome.is_accepted() ? " for a different snapshot" : ""),
              out);
        return;
    }

    phase_ = BootstrapPhase::Accepted;
    finished_ = true;
    result_ = BootstrapResult{std::move(*snapshot_), *chosen_, std::move(snapshot_utxo_), std::move(headers_),
                              std::move(blocks), std::move(utxo), outcome};
    out.push_back(ba::Finished{true});
}

void Bootstrap::on_timeout(const be::Timeout& e, Actions& out) {
    if (e.token != timer_token_) return;
    switch (phase_) {
        case BootstrapPhase::AcquireSnapshot:
            if (!chosen_) conclude_acquire(out);
            else abort("snapshot download timed out", out);
            break;
        case BootstrapPhase::FetchHeaders: abort("header download timed out", out); break;
        case BootstrapPhase::FetchChaintail: abort("chaintail download timed out", out); break;
        default: break;
    }
}

void Bootstrap::abort(const std::string& reason, Actions& out) {
    phase_ = BootstrapPhase::Aborted;
    abort_reason_ = reason;
    ++timer_token_;  // stale timers become no-ops
    if (retries_ >= config_.max_retries) {
        finished_ = true;
        out.push_back(ba::Finished{false});
        return;
    }
    ++retries_;
    out.push_back(ba::Reconnect{});
}

}  // namespace coinprune
