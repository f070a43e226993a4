#include "coinprune/node.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <stdexcept>

#include "coinprune/genesis.hpp"
#include "coinprune/log.hpp"

namespace coinprune {

namespace {

constexpr std::uint64_t kKindShift = 60;
constexpr std::uint64_t kPayloadMask = (1ull << kKindShift) - 1;
constexpr std::uint64_t kTimerBootstrap = 1;
constexpr std::uint64_t kTimerHandshake = 2;
constexpr std::uint64_t kTimerSync = 3;

constexpr std::size_t kMaxOrphans = 4096;
constexpr std::size_t kGetDataBatch = 128;
constexpr std::size_t kPulseCheckpoints = 3;
constexpr std::size_t kCraftedKept = 2;
constexpr std::uint32_t kMaxSyncRounds = 10;

std::uint64_t timer(std::uint64_t kind, std::uint64_t payload) { return (kind << kKindShift) | (payload & kPayloadMask); }

constexpr std::array<std::pair<Role, std::string_view>, 6> kRoles = {{
    {Role::LegacyFull, "LEGACY_FULL"},
    {Role::CoinPruneFull, "COINPRUNE_FULL"},
    {Role::CoinPruneMiner, "COINPRUNE_MINER"},
    {Role::AdversaryMiner, "ADVERSARY_MINER"},
    {Role::Archival, "ARCHIVAL"},
    {Role::Joining, "JOINING"},
}};

constexpr std::array<std::pair<Misbehavior, std::string_view>, 3> kMisbehaviors = {{
    {Misbehavior::None, "NONE"},
    {Misbehavior::ReaffirmInvalid, "REAFFIRM_INVALID"},
    {Misbehavior::TamperChunks, "TAMPER_CHUNKS"},
}};

}  // namespace

std::string_view to_string(Role role) {
    for (const auto& [r, s] : kRoles)
        if (r == role) return s;
    return "?";
}

std::optional<Role> role_from_string(std::string_view s) {
    for (const auto& [r, name] : kRoles)
        if (name == s) return r;
    return std::nullopt;
}

std::string_view to_string(Misbehavior m) {
    for (const auto& [v, s] : kMisbehaviors)
        if (v == m) return s;
    return "?";
}

std::optional<Misbehavior> misbehavior_from_string(std::string_view s) {
    for (const auto& [v, name] : kMisbehaviors)
        if (name == s) return v;
    return std::nullopt;
}

std::string_view to_string(JoinStatus s) {
    switch (s) {
        case JoinStatus::None: return "-";
        case JoinStatus::Bootstrapping: return "PENDING";
        case JoinStatus::Accepted: return "ACCEPTED";
        case JoinStatus::Failed: return "FAILED";
        case JoinStatus::LegacySyncing: return "PENDING";
        case JoinStatus::Synced: return "SYNCED";
    }
    return "?";
}

void NodeConfig::validate() const {
    pulse.validate();
    if (!(mining_power >= 0)) throw std::invalid_argument("mining_power must be non-negative");
    if (neighbor_count == 0) throw std::invalid_argument("neighbor_count must be positive");
    if (chunk_limit == 0) throw std::invalid_argument("chunk_limit must be positive");
    if (role == Role::AdversaryMiner && misbehavior == Misbehavior::None)
        throw std::invalid_argument("ADVERSARY_MINER needs a misbehavior");
    if (misbehavior != Misbehavior::None && honest) throw std::invalid_argument("a misbehaving node cannot be honest");
    if (misbehavior == Misbehavior::ReaffirmInvalid && role != Role::AdversaryMiner)
        throw std::invalid_argument("REAFFIRM_INVALID is only meaningful for ADVERSARY_MINER");
    if (misbehavior != Misbehavior::None && !coinprune_aware(role))
        throw std::invalid_argument("legacy nodes cannot misbehave at the CoinPrune layer");
    if (role == Role::Joining && mining_power > 0) throw std::invalid_argument("JOINING nodes do not mine");
}

Node::Node(PeerId id, NodeConfig config, const NetworkParams& params, NodeEnv& env, std::uint64_t seed, bool joining)
    : id_(id),
      config_(std::move(config)),
      role_(config_.role),
      params_(params),
      env_(env),
      rng_(seed),
      store_(config_.role == Role::Archival) {
    config_.validate();
    const Block& g = params_.genesis;
    const Hash256 gid = block_id(g.header);
    tree_.emplace(gid, Entry{g.header, 0, work_from_bits(g.header.bits), arrivals_++, std::make_shared<const Block>(g), false});
    main_.push_back(gid);
    store_.record_block(g, 0);
    apply_block_in_place(store_.utxo(), g, 0, params_.chain);
    checkpoints_[0] = {gid, store_.utxo()};

    if (role_ == Role::Joining && !joining) throw std::invalid_argument("JOINING role is only valid for join events");
    if (joining) {
        join_.join_time = env_.now();
        if (role_ == Role::Joining) {
            join_status_ = JoinStatus::Bootstrapping;
            BootstrapConfig bc;
            bc.chain = params_.chain;
            bc.pulse = config_.pulse;
            bc.decision_depth = config_.decision_depth;
            bc.genesis_header = g.header;
            bc.max_retries = params_.max_retries;
            bc.timeout = params_.timeout;
            bootstrap_ = std::make_unique<Bootstrap>(bc);
        } else if (role_ == Role::LegacyFull) {
            join_status_ = JoinStatus::LegacySyncing;
        } else {
            throw std::invalid_argument("join events must be JOINING or LEGACY_FULL");
        }
        awaiting_start_ = true;
        arm_handshake_timer();
    }
}

// -- state --------------------------------------------------------------------

bool Node::operational() const {
    if (failed()) return false;
    return join_status_ == JoinStatus::None || join_status_ == JoinStatus::Accepted ||
           join_status_ == JoinStatus::LegacySyncing || join_status_ == JoinStatus::Synced;
}

std::uint64_t Node::services() const {
    std::uint64_t s = 0;
    const bool history = store_.prune_height() == 0 && (join_status_ == JoinStatus::None || join_status_ == JoinStatus::Synced);
    if (history) s |= p2p::kNodeNetwork;
    if (coinprune_aware(role_)) s |= p2p::kNodeCoinPrune;
    return s;
}

std::optional<SnapshotId> Node::candidate(std::uint32_t pulse_height) const {
    auto it = candidates_.find(pulse_height);
    if (it == candidates_.end()) return std::nullopt;
    return it->second;
}

std::optional<SnapshotId> Node::crafted(std::uint32_t pulse_height) const {
    auto it = crafted_.find(pulse_height);
    if (it == crafted_.end()) return std::nullopt;
    return it->second.id;
}

std::set<PeerId> Node::banned_peers() const { return bootstrap_ ? bootstrap_->banned() : std::set<PeerId>{}; }

std::vector<PeerId> Node::peers() const {
    std::vector<PeerId> out;
    for (const auto& [p, _] : peers_) out.push_back(p);
    return out;
}

const StoredSnapshot* Node::advertised_snapshot() const {
    if (config_.misbehavior == Misbehavior::ReaffirmInvalid) {
        for (auto it = crafted_.rbegin(); it != crafted_.rend(); ++it)
            if (static_cast<std::uint64_t>(it->first) + config_.pulse.delta_r + config_.decision_depth <= tip_height())
                return &it->second;
    }
    return store_.accepted_snapshot();
}

bool Node::on_main_chain(const Hash256& id, std::uint32_t height) const {
    return height < main_.size() && main_[height] == id;
}

void Node::fail(const std::string& reason) {
    if (failure_) return;
    failure_ = reason;
    log::info("node " + std::to_string(id_) + " failed: " + reason);
}

// -- handshake and relay ------------------------------------------------------

p2p::VersionPayload Node::local_version() const { return {p2p::kProtocolVersion, services(), tip_height()}; }

void Node::send(PeerId to, const p2p::Message& m) {
    if (peers_.contains(to)) env_.send(id_, to, m);
}

void Node::on_connect(PeerId peer, bool outbound) {
    auto& p = peers_[peer];
    p = Peer{};
    p.outbound = outbound;
    if (outbound) {
        p.version_sent = true;
        send(peer, local_version());
    }
}

void Node::on_disconnect(PeerId peer) { peers_.erase(peer); }

void Node::count_event() {
    if (join_status_ == JoinStatus::Bootstrapping || join_status_ == JoinStatus::LegacySyncing) ++join_.events;
}

void Node::on_message(PeerId from, const p2p::Message& message) {
    if (failed() || join_status_ == JoinStatus::Failed || !peers_.contains(from)) return;
    count_event();
    if (auto* v = std::get_if<p2p::VersionPayload>(&message)) return on_version(from, *v);
    if (std::holds_alternative<p2p::Verack>(message)) return on_verack(from);
    if (!peers_.at(from).ready()) return;

    const bool booting = join_status_ == JoinStatus::Bootstrapping;
    std::visit(
        [&](const auto& m) {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, p2p::GetHeaders>) {
                on_getheaders(from, m);
            } else if constexpr (std::is_same_v<M, p2p::Headers>) {
                if (booting) run_bootstrap(bootstrap_event::HeadersArrived{from, m});
                else if (join_status_ == JoinStatus::LegacySyncing) legacy_on_headers(from, m);
            } else if constexpr (std::is_same_v<M, p2p::GetData>) {
                on_getdata(from, m);
            } else if constexpr (std::is_same_v<M, p2p::BlockMessage>) {
                if (booting) run_bootstrap(bootstrap_event::BlockArrived{from, m.block});
                else process_block(from, std::make_shared<const Block>(m.block));
            } else if constexpr (std::is_same_v<M, p2p::Inv>) {
                on_inv(from, m);
            } else if constexpr (std::is_same_v<M, p2p::GetState>) {
                on_getstate(from);
            } else if constexpr (std::is_same_v<M, p2p::StateChunk>) {
                if (booting) run_bootstrap(bootstrap_event::ChunkArrived{from, m});
            }
        },
        message);
}

void Node::on_version(PeerId from, const p2p::VersionPayload& v) {
    auto& p = peers_.at(from);
    if (p.version_received) return;
    p.remote = v;
    p.version_received = true;
    try {
        p.caps = p2p::negotiate(local_version(), v);
    } catch (const p2p::ProtocolError& e) {
        log::debug("node " + std::to_string(id_) + " drops peer " + std::to_string(from) + ": " + e.what());
        env_.disconnect(id_, from);
        return;
    }
    if (!p.version_sent) {
        p.version_sent = true;
        send(from, local_version());
    }
    send(from, p2p::Verack{});
    if (p.ready()) on_peer_ready(from);
}

void Node::on_verack(PeerId from) {
    auto& p = peers_.at(from);
    if (p.verack_received) return;
    p.verack_received = true;
    if (p.ready()) on_peer_ready(from);
}

void Node::on_peer_ready(PeerId) { maybe_start_join(); }

void Node::on_inv(PeerId from, const p2p::Inv& inv) {
    if (inv.items.empty() || inv.items.front().kind == p2p::InvKind::State) {
        if (join_status_ == JoinStatus::Bootstrapping) run_bootstrap(bootstrap_event::StateAdvert{from, inv});
        return;
    }
    for (const auto& item : inv.items) {
        if (item.kind != p2p::InvKind::Block) continue;
        peers_.at(from).known.insert(item.hash);
        if (join_status_ == JoinStatus::Bootstrapping) {
            stashed_invs_.emplace_back(from, item.hash);
            continue;
        }
        if (!operational() || tree_.contains(item.hash) || orphan_ids_.contains(item.hash)) continue;
        request_block(from, item.hash);
    }
}

void Node::request_block(PeerId from, const Hash256& id) {
    auto it = in_flight_.find(id);
    if (it != in_flight_.end() && env_.now() - it->second < params_.timeout) return;
    in_flight_[id] = env_.now();
    send(from, p2p::GetData{{{p2p::InvKind::Block, id}}});
}

void Node::on_getdata(PeerId from, const p2p::GetData& req) {
    if (!operational()) return;
    for (const auto& item : req.items) {
        if (item.kind == p2p::InvKind::Block) {
            auto it = tree_.find(item.hash);
            if (it == tree_.end() || !it->second.body) continue;
            peers_.at(from).known.insert(item.hash);
            send(from, p2p::BlockMessage{*it->second.body});
            continue;
        }
        if (!peers_.at(from).caps.coinprune) continue;
        const StoredSnapshot* adv = advertised_snapshot();
        if (adv == nullptr) continue;
        auto piece = p2p::serve_state_item(adv->snapshot, adv->id, item.hash);
        if (!piece) continue;
        if (config_.misbehavior == Misbehavior::TamperChunks && !piece->data.empty())
            piece->data[rng_() % piece->data.size()] ^= 0x01;
        send(from, *piece);
    }
}

void Node::on_getheaders(PeerId from, const p2p::GetHeaders& req) {
    if (!operational()) return;
    std::uint32_t start = 1;
    for (const auto& loc : req.locator) {
        auto it = tree_.find(loc);
        if (it != tree_.end() && on_main_chain(loc, it->second.height)) {
            start = it->second.height + 1;
            break;
        }
    }
    p2p::Headers out;
    const auto& metas = store_.metas();
    for (std::uint32_t h = start; h < metas.size() && out.entries.size() < p2p::kMaxHeadersPerMessage; ++h)
        out.entries.push_back({metas[h].header, metas[h].tx_count});
    send(from, out);
}

void Node::on_getstate(PeerId from) {
    if (!operational() || !peers_.at(from).caps.coinprune) return;
    const StoredSnapshot* adv = advertised_snapshot();
    send(from, adv ? p2p::state_inventory(adv->snapshot) : p2p::Inv{});
}

void Node::announce_tip() {
    const Hash256 tip = tip_id();
    for (auto& [peer, p] : peers_) {
        if (!p.ready() || p.known.contains(tip)) continue;
        p.known.insert(tip);
        env_.send(id_, peer, p2p::Inv{{{p2p::InvKind::Block, tip}}});
    }
}

// -- chain state --------------------------------------------------------------

void Node::process_block(std::optional<PeerId> from, std::shared_ptr<const Block> block) {
    if (failed()) return;
    const Hash256 old_tip = tip_id();
    std::deque<std::shared_ptr<const Block>> queue{std::move(block)};
    bool first = true;
    while (!queue.empty() && !failed()) {
        auto b = std::move(queue.front());
        queue.pop_front();
        const Hash256 id = block_id(b->header);
        if (accept_into_tree(first ? from : std::nullopt, b)) {
            if (auto it = orphans_.find(id); it != orphans_.end()) {
                for (auto& child : it->second) {
                    orphan_ids_.erase(block_id(child->header));
                    queue.push_back(std::move(child));
                }
                orphans_.erase(it);
            }
        }
        first = false;
    }
    if (failed()) return;
    if (tip_id() != old_tip) announce_tip();
    legacy_check_done();
}

bool Node::accept_into_tree(std::optional<PeerId> from, const std::shared_ptr<const Block>& block) {
    const Hash256 id = block_id(block->header);
    if (from && peers_.contains(*from)) peers_.at(*from).known.insert(id);
    in_flight_.erase(id);
    if (tree_.contains(id)) return false;
    try {
        check_block(*block, params_.chain);
    } catch (const ChainError& e) {
        ++rejected_blocks_;
        log::info("node " + std::to_string(id_) + " rejects block " + id.hex() + ": " + e.what());
        return false;
    }
    auto parent = tree_.find(block->header.prev_id);
    if (parent == tree_.end()) {
        if (orphan_ids_.size() < kMaxOrphans && orphan_ids_.insert(id).second) {
            orphans_[block->header.prev_id].push_back(block);
            const Hash256& prev = block->header.prev_id;
            if (from && !orphan_ids_.contains(prev)) request_block(*from, prev);
        }
        return false;
    }
    if (parent->second.invalid) {
        tree_.emplace(id, Entry{block->header, parent->second.height + 1, parent->second.work, arrivals_++, block, true});
        ++rejected_blocks_;
        return false;
    }
    Entry e{block->header, parent->second.height + 1, parent->second.work + work_from_bits(block->header.bits), arrivals_++,
            block, false};
    tree_.emplace(id, std::move(e));
    activate_best(id);
    return true;
}

void Node::activate_best(const Hash256& candidate) {
    {
        const Entry& c = tree_.at(candidate);
        const Entry& t = tree_.at(tip_id());
        const std::array<TipCandidate, 2> tips{TipCandidate{tip_id(), t.work, t.arrival},
                                               TipCandidate{candidate, c.work, c.arrival}};
        if (fork_choice(tips) != candidate) return;
    }

    std::vector<Hash256> path;
    Hash256 cur = candidate;
    for (;;) {
        auto it = tree_.find(cur);
        if (it == tree_.end()) return;
        if (on_main_chain(cur, it->second.height)) break;
        if (!it->second.body) return;
        path.push_back(cur);
        cur = it->second.header.prev_id;
    }
    std::reverse(path.begin(), path.end());
    const std::uint32_t fork = tree_.at(cur).height;

    if (fork == tip_height()) {
        for (const auto& id : path)
            if (!connect_block(id)) break;
        return;
    }

    // Reorg: rebuild the UTXO set at the fork point from the newest usable
    // checkpoint, trial-apply the new branch, then commit.
    const Checkpoint* cp = nullptr;
    std::uint32_t cp_height = 0;
    for (auto it = checkpoints_.rbegin(); it != checkpoints_.rend(); ++it) {
        if (it->first <= fork && on_main_chain(it->second.id, it->first)) {
            cp = &it->second;
            cp_height = it->first;
            break;
        }
    }
    if (cp == nullptr) {
        fail("fatal reorg: fork at height " + std::to_string(fork) + " is below the retained state");
        return;
    }
    UtxoSet base = cp->utxo;
    for (std::uint32_t h = cp_height + 1; h <= fork; ++h) {
        const auto& body = tree_.at(main_[h]).body;
        if (!body) {
            fail("fatal reorg: body at height " + std::to_string(h) + " was pruned");
            return;
        }
        apply_block_in_place(base, *body, h, params_.chain);
    }
    {
        UtxoSet trial = base;
        for (std::size_t i = 0; i < path.size(); ++i) {
            Entry& e = tree_.at(path[i]);
            try {
                apply_block_in_place(trial, *e.body, e.height, params_.chain);
            } catch (const ChainError& ex) {
                e.invalid = true;
                ++rejected_blocks_;
                log::info("node " + std::to_string(id_) + " rejects branch block: " + ex.what());
                return;
            }
        }
    }
    try {
        store_.truncate_above(fork);
    } catch (const StoreError& e) {
        fail(e.what());
        return;
    }
    log::debug("node " + std::to_string(id_) + " reorg at fork height " + std::to_string(fork));
    main_.resize(fork + 1);
    checkpoints_.erase(checkpoints_.upper_bound(fork), checkpoints_.end());
    candidates_.erase(candidates_.upper_bound(fork), candidates_.end());
    crafted_.erase(crafted_.upper_bound(fork), crafted_.end());
    std::erase_if(decided_, [&](const auto& kv) {
        return static_cast<std::uint64_t>(kv.first) + config_.pulse.delta_r + config_.decision_depth > fork &&
               kv.first > base_height_;
    });
    store_.utxo() = std::move(base);
    for (const auto& id : path)
        if (!connect_block(id)) break;
}

bool Node::connect_block(const Hash256& id) {
    Entry& e = tree_.at(id);
    try {
        apply_block_in_place(store_.utxo(), *e.body, e.height, params_.chain);
    } catch (const ChainError& ex) {
        e.invalid = true;
        ++rejected_blocks_;
        log::info("node " + std::to_string(id_) + " rejects block at height " + std::to_string(e.height) + ": " + ex.what());
        return false;
    }
    store_.record_block(*e.body, e.height);
    main_.push_back(id);
    on_connected(e.height);
    return !failed();
}

void Node::on_connected(std::uint32_t h) {
    const auto& pulse = config_.pulse;
    if (is_pulse(h, pulse)) {
        checkpoints_[h] = {main_[h], store_.utxo()};
        // Genesis plus the most recent few pulses.
        while (checkpoints_.size() > kPulseCheckpoints + (checkpoints_.contains(0) ? 1 : 0)) {
            auto oldest = checkpoints_.begin();
            if (oldest->first == 0) ++oldest;
            checkpoints_.erase(oldest);
        }
        if (coinprune_aware(role_)) {
            Snapshot snap = create_snapshot(store_.utxo(), h, main_[h], config_.chunk_limit);
            const SnapshotId sid = snapshot_id(snap);
            candidates_[h] = sid;
            store_.add_candidate(std::move(snap), sid);
            if (config_.misbehavior == Misbehavior::ReaffirmInvalid) {
                UtxoSet forged = store_.utxo();
                Writer tag;
                tag.bytes(as_bytes("forged"));
                tag.u32(h);
                forged.emplace(OutPoint{hash256(tag.data()), 0}, TxOut{params_.chain.subsidy * 100, wallet_script(0), h, false});
                Snapshot bad = create_snapshot(forged, h, main_[h], config_.chunk_limit);
                const SnapshotId bad_id = snapshot_id(bad);
                crafted_[h] = StoredSnapshot{std::move(bad), bad_id, false};
                while (crafted_.size() > kCraftedKept) crafted_.erase(crafted_.begin());
            }
        }
    }
    const std::uint64_t lag = static_cast<std::uint64_t>(pulse.delta_r) + config_.decision_depth;
    if (coinprune_aware(role_) && h >= lag) {
        const auto p = static_cast<std::uint32_t>(h - lag);
        if (is_pulse(p, pulse) && p > base_height_ && !decided_.contains(p)) evaluate_pulse(p);
    }
}

void Node::evaluate_pulse(std::uint32_t p) {
    std::vector<ChainBlockRef> refs;
    for (std::uint32_t h = p + 1; h <= p + config_.pulse.delta_r && h < main_.size(); ++h)
        refs.push_back({h, tree_.at(main_[h]).body.get()});
    const auto outcome = decide(tally(refs, p, config_.pulse), config_.pulse);
    decided_[p] = outcome;
    on_pulse_outcome(p, outcome);
}

void Node::on_pulse_outcome(std::uint32_t p, const PulseOutcome& outcome) {
    if (!outcome.is_accepted()) return;  // keep the previous snapshot; pruning waits for a later pulse
    auto own = candidates_.find(p);
    if (own == candidates_.end() || own->second != *outcome.id) return;
    if (store_.find_snapshot(*outcome.id) == nullptr) return;
    store_.accept_snapshot(*outcome.id);
    accepted_.push_back({p, *outcome.id});
    store_.prune_below(p + 1);
    store_.retire_old_snapshot();
    if (store_.archival()) return;
    for (std::uint32_t h = 0; h <= p && h < main_.size(); ++h) tree_.at(main_[h]).body.reset();
    checkpoints_.erase(checkpoints_.begin(), checkpoints_.lower_bound(p));
}

// -- mining -------------------------------------------------------------------

Bytes Node::miner_on_block() const {
    const std::uint32_t h = tip_height() + 1;
    Writer w(4 + 75);  // height plus one marker
    w.u32(h);
    if (role_ != Role::CoinPruneMiner && role_ != Role::AdversaryMiner) return w.take();
    const auto p = pulse_height_for(h, config_.pulse);
    if (!p || !in_window(h, *p, config_.pulse)) return w.take();
    std::optional<SnapshotId> id;
    if (config_.misbehavior == Misbehavior::ReaffirmInvalid) id = crafted(*p);
    else id = candidate(*p);
    if (id) w.bytes(encode_marker(*id));
    return w.take();
}

Block Node::make_block(std::uint32_t timestamp, std::vector<Transaction> txs, std::uint64_t fees,
                       const Bytes& reward_script) const {
    Transaction cb;
    cb.outputs.push_back({params_.chain.subsidy + fees, reward_script});
    cb.coinbase_data = miner_on_block();
    Block b;
    b.transactions.reserve(txs.size() + 1);
    b.transactions.push_back(std::move(cb));
    for (auto& tx : txs) b.transactions.push_back(std::move(tx));
    b.header.version = 1;
    b.header.prev_id = tip_id();
    b.header.timestamp = timestamp;
    b.header.bits = params_.chain.bits;
    b.header.merkle_root = block_merkle_root(b);
    grind_nonce(b.header);
    return b;
}

void Node::submit_block(const Block& block) { process_block(std::nullopt, std::make_shared<const Block>(block)); }

// -- joining ------------------------------------------------------------------

void Node::arm_handshake_timer() { env_.arm_timer(id_, params_.timeout, timer(kTimerHandshake, ++handshake_token_)); }

void Node::maybe_start_join() {
    if (!awaiting_start_ || peers_.empty()) return;
    for (const auto& [_, p] : peers_)
        if (!p.ready()) return;
    start_join_attempt();
}

void Node::start_join_attempt() {
    awaiting_start_ = false;
    ++handshake_token_;
    for (const auto& [peer, p] : peers_)
        if (p.ready()) tried_.insert(peer);
    if (join_status_ == JoinStatus::Bootstrapping) {
        std::vector<PeerId> capable;
        for (const auto& [peer, p] : peers_)
            if (p.ready() && p.caps.coinprune) capable.push_back(peer);
        run_bootstrap(bootstrap_event::Start{capable});
    } else if (join_status_ == JoinStatus::LegacySyncing) {
        legacy_start();
    }
}

void Node::on_timer(std::uint64_t token) {
    if (failed() || join_status_ == JoinStatus::Failed) return;
    const std::uint64_t kind = token >> kKindShift;
    const std::uint64_t payload = token & kPayloadMask;
    if (kind == kTimerBootstrap) {
        if (join_status_ != JoinStatus::Bootstrapping) return;
        count_event();
        run_bootstrap(bootstrap_event::Timeout{payload});
    } else if (kind == kTimerHandshake) {
        if (!awaiting_start_ || payload != handshake_token_) return;
        count_event();
        start_join_attempt();
    } else if (kind == kTimerSync) {
        if (join_status_ != JoinStatus::LegacySyncing || payload != sync_token_) return;
        count_event();
        if (++sync_rounds_ > kMaxSyncRounds) {
            join_status_ = JoinStatus::Failed;
            join_.done_time = env_.now();
            join_.last_abort = "legacy sync stalled";
            return;
        }
        if (!sync_headers_done_) legacy_start();
        else {
            legacy_request_missing();
            env_.arm_timer(id_, params_.timeout, timer(kTimerSync, ++sync_token_));
        }
    }
}

void Node::run_bootstrap(const BootstrapEvent& event) {
    for (auto& action : bootstrap_->step(event)) {
        if (auto* s = std::get_if<bootstrap_action::Send>(&action)) {
            send(s->peer, s->message);
        } else if (auto* t = std::get_if<bootstrap_action::ArmTimer>(&action)) {
            env_.arm_timer(id_, t->delay, timer(kTimerBootstrap, t->token));
        } else if (std::holds_alternative<bootstrap_action::Reconnect>(action)) {
            join_.retries = bootstrap_->retries();
            join_.last_abort = bootstrap_->last_abort_reason();
            log::debug("node " + std::to_string(id_) + " bootstrap attempt aborted: " + join_.last_abort);
            awaiting_start_ = true;
            env_.request_neighbors(id_);
            arm_handshake_timer();
        } else if (auto* f = std::get_if<bootstrap_action::Finished>(&action)) {
            join_.retries = bootstrap_->retries();
            join_.done_time = env_.now();
            if (f->accepted) {
                adopt_bootstrap();
            } else {
                join_.last_abort = bootstrap_->last_abort_reason();
                join_status_ = JoinStatus::Failed;
                log::info("node " + std::to_string(id_) + " gave up bootstrapping: " + join_.last_abort);
            }
            return;
        }
    }
}

void Node::adopt_bootstrap() {
    const BootstrapResult& r = *bootstrap_->result();
    const std::uint32_t p = r.snapshot.header.height;

    tree_.clear();
    main_.clear();
    orphans_.clear();
    orphan_ids_.clear();
    in_flight_.clear();
    checkpoints_.clear();
    store_ = NodeStore(false);
    Work work = 0;
    for (std::uint32_t h = 0; h <= p; ++h) {
        const auto& hdr = r.headers[h].header;
        work += work_from_bits(hdr.bits);
        const Hash256 id = block_id(hdr);
        tree_.emplace(id, Entry{hdr, h, work, arrivals_++, nullptr, false});
        main_.push_back(id);
        store_.record_header(hdr, h, r.headers[h].tx_count);
    }
    store_.install_accepted(r.snapshot, r.id);
    store_.utxo() = r.snapshot_utxo;
    checkpoints_[p] = {main_[p], r.snapshot_utxo};
    base_height_ = p;
    candidates_[p] = r.id;
    decided_[p] = r.outcome;
    accepted_.push_back({p, r.id});

    role_ = Role::CoinPruneFull;
    join_status_ = JoinStatus::Accepted;
    join_.events_to_accept = join_.events;
    log::info("node " + std::to_string(id_) + " accepted snapshot " + r.id.hex() + " at height " + std::to_string(p));

    for (const auto& b : r.chaintail) process_block(std::nullopt, std::make_shared<const Block>(b));
    auto stashed = std::move(stashed_invs_);
    stashed_invs_.clear();
    for (const auto& [peer, h] : stashed)
        if (!tree_.contains(h) && !orphan_ids_.contains(h)) request_block(peer, h);
}

void Node::legacy_start() {
    sync_peers_.clear();
    for (const auto& [peer, p] : peers_)
        if (p.ready() && p.caps.full_history) sync_peers_.push_back(peer);
    if (sync_peers_.empty()) {
        if (join_.retries >= params_.max_retries) {
            join_status_ = JoinStatus::Failed;
            join_.done_time = env_.now();
            join_.last_abort = "no full-history peers";
            return;
        }
        ++join_.retries;
        awaiting_start_ = true;
        env_.request_neighbors(id_);
        arm_handshake_timer();
        return;
    }
    // Rotate the header source across rounds.
    std::rotate(sync_peers_.begin(), sync_peers_.begin() + (sync_rounds_ % sync_peers_.size()), sync_peers_.end());
    sync_headers_.clear();
    sync_headers_done_ = false;
    send(sync_peers_.front(), p2p::GetHeaders{{main_.front()}});
    env_.arm_timer(id_, params_.timeout, timer(kTimerSync, ++sync_token_));
}

void Node::legacy_on_headers(PeerId from, const p2p::Headers& h) {
    if (sync_headers_done_ || sync_peers_.empty() || from != sync_peers_.front()) return;
    sync_headers_.insert(sync_headers_.end(), h.entries.begin(), h.entries.end());
    if (h.entries.size() == p2p::kMaxHeadersPerMessage) {
        send(from, p2p::GetHeaders{{block_id(sync_headers_.back().header)}});
        return;
    }
    std::vector<BlockHeader> chain{params_.genesis.header};
    for (const auto& e : sync_headers_) chain.push_back(e.header);
    try {
        validate_header_chain(chain, main_.front());
    } catch (const ChainError& e) {
        log::info("node " + std::to_string(id_) + " got a bad header chain: " + e.what());
        sync_headers_.clear();
        return;  // the sync timer retries with another source
    }
    sync_headers_done_ = true;
    sync_target_ = static_cast<std::uint32_t>(sync_headers_.size());
    legacy_request_missing();
    legacy_check_done();
}

void Node::legacy_request_missing() {
    std::vector<Hash256> missing;
    for (const auto& e : sync_headers_) {
        const Hash256 id = block_id(e.header);
        if (!tree_.contains(id) && !orphan_ids_.contains(id)) missing.push_back(id);
    }
    std::vector<PeerId> sources;
    for (PeerId p : sync_peers_)
        if (peers_.contains(p)) sources.push_back(p);
    if (sources.empty()) return;
    for (std::size_t start = 0, batch = 0; start < missing.size(); start += kGetDataBatch, ++batch) {
        p2p::GetData req;
        for (std::size_t i = start; i < std::min(missing.size(), start + kGetDataBatch); ++i) {
            req.items.push_back({p2p::InvKind::Block, missing[i]});
            in_flight_[missing[i]] = env_.now();
        }
        send(sources[batch % sources.size()], req);
    }
}

void Node::legacy_check_done() {
    if (join_status_ != JoinStatus::LegacySyncing || !sync_headers_done_ || tip_height() < sync_target_) return;
    join_status_ = JoinStatus::Synced;
    join_.done_time = env_.now();
    join_.events_to_accept = join_.events;
    ++sync_token_;
}

}  // namespace coinprune
