#include "coinprune/simnet.hpp"

#include <algorithm>
#include <stdexcept>

#include "coinprune/log.hpp"

namespace coinprune {

namespace {
constexpr std::uint64_t kEventBudget = 200'000'000;
}

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below(0)");
    // Rejection sampling over the largest multiple of n.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    for (;;) {
        const std::uint64_t x = next();
        if (x < limit) return x % n;
    }
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

std::vector<Transaction> generate_transactions(const UtxoSet& utxo, const Workload& workload, const Wallet& wallet,
                                               Rng& rng, std::uint64_t& fees) {
    const std::uint32_t per_tx = workload.inputs_per_tx();
    const std::size_t n_tx = std::min<std::size_t>(workload.txs_per_block, utxo.size() / per_tx);
    const std::size_t picks = n_tx * per_tx;
    std::vector<Transaction> txs;
    if (picks == 0) return txs;

    // Floyd's algorithm: `picks` distinct indices, already sorted.
    std::set<std::size_t> chosen;
    for (std::size_t j = utxo.size() - picks; j < utxo.size(); ++j) {
        const auto t = static_cast<std::size_t>(rng.below(j + 1));
        if (!chosen.insert(t).second) chosen.insert(j);
    }
    std::vector<UtxoSet::const_iterator> inputs;
    inputs.reserve(picks);
    auto it = utxo.begin();
    std::size_t pos = 0;
    for (std::size_t idx : chosen) {
        std::advance(it, idx - pos);
        pos = idx;
        inputs.push_back(it);
    }
    rng.shuffle(inputs);

    for (std::size_t t = 0; t < n_tx; ++t) {
        Transaction tx;
        std::uint64_t total = 0;
        for (std::size_t i = t * per_tx; i < (t + 1) * per_tx; ++i) {
            const Bytes* secret = wallet.secret_for(inputs[i]->second.script);
            if (secret == nullptr) continue;
            tx.inputs.push_back({inputs[i]->first, *secret});
            total += inputs[i]->second.value;
        }
        if (tx.inputs.empty()) continue;
        const std::uint64_t outs = std::min<std::uint64_t>(workload.outputs_per_tx, std::max<std::uint64_t>(total, 1));
        const std::uint64_t fee = total > workload.fee + outs ? workload.fee : 0;
        const std::uint64_t spend = total - fee;
        for (std::uint64_t o = 0; o < outs; ++o) {
            const std::uint64_t value = o + 1 == outs ? spend - (spend / outs) * (outs - 1) : spend / outs;
            tx.outputs.push_back({value, wallet.script(static_cast<std::uint32_t>(rng.below(kWalletKeys)))});
        }
        fees += fee;
        txs.push_back(std::move(tx));
    }
    return txs;
}

// -- simulation ---------------------------------------------------------------

Simulation::Simulation(Scenario scenario) : scenario_(std::move(scenario)), rng_(mix_seed(scenario_.seed, 0)) {
    scenario_.validate();
    network_.chain = scenario_.chain;
    network_.genesis = make_genesis(scenario_.chain);
    network_.timeout = 4 * scenario_.latency.max;
    network_.max_retries = scenario_.max_retries;
}

Simulation::~Simulation() = default;

void Simulation::push(Event e) {
    e.seq = seq_++;
    heap_.push_back(std::move(e));
    std::push_heap(heap_.begin(), heap_.end(), Later{});
}

void Simulation::send(PeerId from, PeerId to, const p2p::Message& message) {
    Bytes frame = p2p::encode(message, scenario_.magic);
    const std::string cmd(p2p::command_name(p2p::command_of(message)));
    auto& t = traffic_.at(from);
    t.bytes_out += frame.size();
    t.sent[cmd] += frame.size();

    auto& last = last_arrival_[{from, to}];
    const std::uint64_t at = std::max(now_ + rng_.between(scenario_.latency.min, scenario_.latency.max), last);
    last = at;
    Event e;
    e.time = at;
    e.kind = EventKind::Deliver;
    e.from = from;
    e.to = to;
    e.frame = std::move(frame);
    push(std::move(e));
}

void Simulation::arm_timer(PeerId node, std::uint64_t delay, std::uint64_t token) {
    Event e;
    e.time = now_ + delay;
    e.kind = EventKind::Timer;
    e.to = node;
    e.token = token;
    push(std::move(e));
}

void Simulation::connect(PeerId a, PeerId b) {
    if (a == b || !links_.insert({std::min(a, b), std::max(a, b)}).second) return;
    nodes_[b]->on_connect(a, false);
    nodes_[a]->on_connect(b, true);
}

void Simulation::disconnect(PeerId a, PeerId b) {
    if (!links_.erase({std::min(a, b), std::max(a, b)})) return;
    nodes_[a]->on_disconnect(b);
    nodes_[b]->on_disconnect(a);
}

std::vector<PeerId> Simulation::eligible_peers(PeerId self, bool need_history) const {
    std::vector<PeerId> all, history;
    for (const auto& n : nodes_) {
        if (n->id() == self || !n->operational()) continue;
        const auto s = n->join_status();
        if (s != JoinStatus::None && s != JoinStatus::Accepted && s != JoinStatus::Synced) continue;
        all.push_back(n->id());
        if (n->services() & p2p::kNodeNetwork) history.push_back(n->id());
    }
    return need_history && !history.empty() ? history : all;
}

void Simulation::connect_fresh(PeerId id, bool first_attempt) {
    Node& node = *nodes_[id];
    for (PeerId p : node.peers()) disconnect(id, p);

    std::vector<PeerId> pick;
    if (first_attempt && eclipsed_[id]) {
        for (const auto& n : nodes_)
            if (n->id() != id && !n->config().honest && n->operational() && n->join_status() == JoinStatus::None)
                pick.push_back(n->id());
        rng_.shuffle(pick);
    } else {
        const bool legacy = node.role() == Role::LegacyFull;
        const auto banned = node.banned_peers();
        const auto& tried = node.tried_peers();
        std::vector<PeerId> fresh, seen;
        for (PeerId p : eligible_peers(id, legacy)) {
            if (banned.contains(p)) continue;
            (tried.contains(p) ? seen : fresh).push_back(p);
        }
        rng_.shuffle(fresh);
        rng_.shuffle(seen);
        pick = std::move(fresh);
        pick.insert(pick.end(), seen.begin(), seen.end());
    }
    if (pick.size() > node.config().neighbor_count) pick.resize(node.config().neighbor_count);
    for (PeerId p : pick) connect(id, p);
}

void Simulation::request_neighbors(PeerId node) { connect_fresh(node, false); }

void Simulation::build_topology() {
    const auto n = static_cast<PeerId>(nodes_.size());
    for (PeerId i = 0; i < n; ++i) {
        std::vector<PeerId> others;
        for (PeerId j = 0; j < n; ++j)
            if (j != i) others.push_back(j);
        rng_.shuffle(others);
        const std::size_t want = std::min<std::size_t>(nodes_[i]->config().neighbor_count, others.size());
        for (std::size_t k = 0; k < want; ++k) connect(i, others[k]);
    }
}

void Simulation::schedule_mine() {
    const double jitter = 0.5 + rng_.unit();  // uniform in [0.5, 1.5)
    Event e;
    e.time = now_ + std::max<std::uint64_t>(1, static_cast<std::uint64_t>(jitter * static_cast<double>(scenario_.block_interval)));
    e.kind = EventKind::Mine;
    push(std::move(e));
}

void Simulation::mine() {
    if (!mining_) return;
    double total = 0;
    std::vector<Node*> miners;
    for (const auto& n : nodes_)
        if (n->config().mining_power > 0 && n->operational()) {
            miners.push_back(n.get());
            total += n->config().mining_power;
        }
    if (miners.empty()) {
        log::error("no operational miner left; stopping block production");
        mining_ = false;
        return;
    }
    double x = rng_.unit() * total;
    Node* miner = miners.back();
    for (Node* m : miners) {
        if (x < m->config().mining_power) {
            miner = m;
            break;
        }
        x -= m->config().mining_power;
    }

    std::uint64_t fees = 0;
    auto txs = generate_transactions(miner->utxo(), scenario_.workload, wallet_, rng_, fees);
    const auto reward = wallet_.script(static_cast<std::uint32_t>(rng_.below(kWalletKeys)));
    Block block = miner->make_block(static_cast<std::uint32_t>(now_), std::move(txs), fees, reward);
    auto shared = std::make_shared<const Block>(std::move(block));
    registry_.emplace(block_id(shared->header), shared);
    ++blocks_mined_;
    miner->submit_block(*shared);
    if (blocks_mined_ % scenario_.storage_sample_every == 0) sample_storage();

    if (extra_mode_ || miner->tip_height() >= scenario_.chain_length) {
        mining_ = false;
        return;
    }
    schedule_mine();
}

void Simulation::join(std::size_t index) {
    const auto& ev = scenario_.join_events.at(index);
    const auto id = static_cast<PeerId>(nodes_.size());
    traffic_.emplace_back();
    eclipsed_[id] = ev.eclipse;
    nodes_.push_back(std::make_unique<Node>(id, ev.node, network_, *this, mix_seed(scenario_.seed, id + 1), true));
    join_node_[index] = id;
    connect_fresh(id, true);
}

void Simulation::sample_storage() {
    for (const auto& n : nodes_) samples_.push_back({now_, n->id(), n->tip_height(), n->store().storage_report()});
}

bool Simulation::converged() const {
    std::optional<Hash256> tip;
    for (const auto& n : nodes_) {
        if (!n->operational()) continue;
        const auto s = n->join_status();
        if (s != JoinStatus::None && s != JoinStatus::Accepted && s != JoinStatus::Synced) continue;
        if (!tip) tip = n->tip_id();
        else if (*tip != n->tip_id()) return false;
    }
    return true;
}

void Simulation::dispatch(Event& e) {
    switch (e.kind) {
        case EventKind::Deliver: {
            auto& t = traffic_.at(e.to);
            p2p::Message m;
            try {
                m = p2p::decode(e.frame, scenario_.magic);
            } catch (const p2p::CodecError& ex) {
                t.bytes_in += e.frame.size();
                log::error(std::string("undecodable frame in flight: ") + ex.what());
                return;
            }
            const std::string cmd(p2p::command_name(p2p::command_of(m)));
            t.bytes_in += e.frame.size();
            t.received[cmd] += e.frame.size();
            nodes_.at(e.to)->on_message(e.from, m);
            break;
        }
        case EventKind::Timer: nodes_.at(e.to)->on_timer(e.token); break;
        case EventKind::Mine: mine(); break;
        case EventKind::Join: join(static_cast<std::size_t>(e.token)); break;
    }
}

void Simulation::drain() {
    while (!heap_.empty()) {
        std::pop_heap(heap_.begin(), heap_.end(), Later{});
        Event e = std::move(heap_.back());
        heap_.pop_back();
        now_ = e.time;
        if (++events_ > kEventBudget) throw std::runtime_error("simulation exceeded its event budget");
        dispatch(e);
    }
}

Metrics Simulation::run() {
    if (ran_) throw std::logic_error("Simulation::run called twice");
    ran_ = true;

    for (std::size_t i = 0; i < scenario_.nodes.size(); ++i) {
        const auto id = static_cast<PeerId>(i);
        traffic_.emplace_back();
        nodes_.push_back(std::make_unique<Node>(id, scenario_.nodes[i], network_, *this, mix_seed(scenario_.seed, id + 1), false));
    }
    build_topology();
    for (std::size_t i = 0; i < scenario_.join_events.size(); ++i) {
        Event e;
        e.time = scenario_.join_events[i].time;
        e.kind = EventKind::Join;
        e.token = i;
        push(std::move(e));
    }
    // Let the initial handshakes settle before the first block.
    now_ = 4 * scenario_.latency.max;
    mining_ = true;
    schedule_mine();
    now_ = 0;

    for (;;) {
        drain();
        if (converged() || extra_blocks_ >= scenario_.max_extra_blocks) break;
        ++extra_blocks_;
        extra_mode_ = true;
        mining_ = true;
        schedule_mine();
    }
    return collect();
}

Metrics Simulation::collect() {
    Metrics m;
    m.scenario = scenario_to_json(scenario_);
    m.name = scenario_.name;
    m.seed = scenario_.seed;
    m.converged = converged();
    m.blocks_mined = blocks_mined_;
    m.extra_blocks = extra_blocks_;
    m.events = events_;
    m.samples = samples_;

    // Best chain: highest operational tip, lowest node id on ties.
    const Node* best = nullptr;
    for (const auto& n : nodes_)
        if (n->operational() && (best == nullptr || n->tip_height() > best->tip_height())) best = n.get();
    if (best == nullptr) best = nodes_.front().get();
    m.tip_height = best->tip_height();
    m.tip_id = best->tip_id();

    best_chain_.clear();
    const Hash256 genesis_id = block_id(network_.genesis.header);
    for (Hash256 cur = m.tip_id; cur != genesis_id;) {
        const auto& b = registry_.at(cur);
        best_chain_.push_back(b.get());
        cur = b->header.prev_id;
    }
    best_chain_.push_back(&network_.genesis);
    std::reverse(best_chain_.begin(), best_chain_.end());

    // Independent replay of the best chain; yields the reference state and
    // the honest snapshot id of every pulse.
    UtxoSet oracle;
    std::map<std::uint32_t, SnapshotId> honest;
    for (std::uint32_t h = 0; h < best_chain_.size(); ++h) {
        apply_block_in_place(oracle, *best_chain_[h], h, network_.chain);
        m.chain_body_bytes += serialize_block(*best_chain_[h]).size();
        if (is_pulse(h, scenario_.pulse))
            honest[h] = snapshot_id(create_snapshot(oracle, h, block_id(best_chain_[h]->header), scenario_.chunk_limit));
    }
    for (const auto& [p, id] : honest) {
        if (static_cast<std::uint64_t>(p) + scenario_.pulse.delta_r > m.tip_height) continue;
        std::vector<ChainBlockRef> refs;
        for (std::uint32_t h = p + 1; h <= p + scenario_.pulse.delta_r; ++h) refs.push_back({h, best_chain_[h]});
        const auto t = tally(refs, p, scenario_.pulse);
        PulseRecord rec{p, decide(t, scenario_.pulse), id, 0, 0};
        for (const auto& [sid, n] : t.counts) (sid == id ? rec.honest_markers : rec.other_markers) += n;
        m.pulses.push_back(rec);
    }

    const Bytes oracle_bytes = serialize_utxo(oracle);
    std::map<PeerId, std::size_t> join_index;
    for (const auto& [ev, node] : join_node_) join_index[static_cast<PeerId>(node)] = ev;
    for (const auto& n : nodes_) {
        NodeMetrics nm;
        nm.id = n->id();
        nm.role = std::string(to_string(n->config().role));
        nm.final_role = std::string(to_string(n->role()));
        nm.honest = n->config().honest;
        nm.misbehavior = std::string(to_string(n->config().misbehavior));
        nm.mining_power = n->config().mining_power;
        nm.tip_height = n->tip_height();
        nm.tip_id = n->tip_id();
        nm.storage = n->store().storage_report();
        nm.traffic = traffic_.at(n->id());
        nm.accepted = n->accepted();
        nm.failure = n->failure();
        nm.rejected_blocks = n->rejected_blocks();
        nm.utxo_matches_oracle = n->tip_id() == m.tip_id && serialize_utxo(n->utxo()) == oracle_bytes;
        for (const auto& rec : nm.accepted) {
            auto it = honest.find(rec.pulse_height);
            if (it == honest.end() || it->second != rec.id) ++m.invalid_acceptances;
        }
        if (join_index.contains(n->id())) {
            const auto& info = n->join_info();
            JoinRecord jr;
            jr.join_time = info.join_time;
            jr.done_time = info.done_time;
            jr.outcome = std::string(to_string(n->join_status()));
            jr.retries = info.retries;
            jr.events_to_accept = info.events_to_accept;
            if (n->join_status() == JoinStatus::Accepted && !n->accepted().empty()) jr.snapshot = n->accepted().front();
            jr.last_abort = info.last_abort;
            jr.eclipsed = eclipsed_[n->id()];
            nm.join = jr;
        }
        m.rejected_blocks += nm.rejected_blocks;
        m.bytes_sent += nm.traffic.bytes_out;
        m.bytes_received += nm.traffic.bytes_in;
        m.nodes.push_back(std::move(nm));
    }
    return m;
}

Metrics run(const Scenario& scenario) {
    Simulation sim(scenario);
    return sim.run();
}

std::vector<Metrics> run_batch_serial(const Scenario& base, std::span<const std::uint64_t> seeds) {
    std::vector<Metrics> out;
    out.reserve(seeds.size());
    for (auto seed : seeds) {
        Scenario s = base;
        s.seed = seed;
        out.push_back(run(s));
    }
    return out;
}

std::vector<Metrics> run_batch(const Scenario& base, std::span<const std::uint64_t> seeds) {
    std::vector<Metrics> out(seeds.size());
    std::vector<std::string> errors(seeds.size());
    const auto n = static_cast<std::int64_t>(seeds.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < n; ++i) {
        try {
            Scenario s = base;
            s.seed = seeds[static_cast<std::size_t>(i)];
            out[static_cast<std::size_t>(i)] = run(s);
        } catch (const std::exception& e) {
            errors[static_cast<std::size_t>(i)] = e.what();
        }
    }
    for (std::size_t i = 0; i < errors.size(); ++i)
        if (!errors[i].empty()) throw std::runtime_error("seed " + std::to_string(seeds[i]) + ": " + errors[i]);
    return out;
}

}  // namespace coinprune
