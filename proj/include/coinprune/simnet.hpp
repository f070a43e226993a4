#pragma once
// Deterministic discrete-event network simulator. A run is a pure function
// of its Scenario (seed included): one event loop, a seeded generator, FIFO
// links with uniformly drawn latency, and power-weighted block production.

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <vector>

#include "coinprune/genesis.hpp"
#include "coinprune/metrics.hpp"
#include "coinprune/node.hpp"
#include "coinprune/scenario.hpp"

namespace coinprune {

/// mt19937_64 with explicit integer and real mappings, so results never
/// depend on a standard library's distribution implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    std::uint64_t next() { return engine_(); }
    /// Uniform in [0, n); n must be positive.
    std::uint64_t below(std::uint64_t n);
    /// Uniform in [lo, hi].
    std::uint64_t between(std::uint64_t lo, std::uint64_t hi) { return lo + below(hi - lo + 1); }
    /// Uniform in [0, 1) with 53 bits of precision.
    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
    }

private:
    std::mt19937_64 engine_;
};

/// splitmix64 finalizer, used to derive independent per-node seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// Spends randomly chosen outputs of `utxo` according to `workload`.
/// Adds the collected fees to `fees`.
std::vector<Transaction> generate_transactions(const UtxoSet& utxo, const Workload& workload, const Wallet& wallet,
                                               Rng& rng, std::uint64_t& fees);

class Simulation final : public NodeEnv {
public:
    explicit Simulation(Scenario scenario);
    ~Simulation() override;
    Simulation(const Simulation&) = delete;
    Simulation& operator=(const Simulation&) = delete;

    /// Runs to completion; may be called once.
    Metrics run();

    const Scenario& scenario() const { return scenario_; }
    const NetworkParams& network() const { return network_; }
    std::size_t node_count() const { return nodes_.size(); }
    const Node& node(PeerId id) const { return *nodes_.at(id); }
    /// Final best chain, genesis first. Valid after run().
    const std::vector<const Block*>& best_chain() const { return best_chain_; }

    // NodeEnv
    std::uint64_t now() const override { return now_; }
    void send(PeerId from, PeerId to, const p2p::Message& message) override;
    void arm_timer(PeerId node, std::uint64_t delay, std::uint64_t token) override;
    void disconnect(PeerId a, PeerId b) override;
    void request_neighbors(PeerId node) override;

private:
    enum class EventKind { Deliver, Timer, Mine, Join };
    struct Event {
        std::uint64_t time = 0;
        std::uint64_t seq = 0;
        EventKind kind = EventKind::Mine;
        PeerId from = 0;
        PeerId to = 0;
        std::uint64_t token = 0;
        Bytes frame;
    };
    struct Later {
        bool operator()(const Event& a, const Event& b) const {
            return a.time != b.time ? a.time > b.time : a.seq > b.seq;
        }
    };

    void push(Event e);
    void drain();
    void dispatch(Event& e);
    void connect(PeerId a, PeerId b);
    void build_topology();
    void schedule_mine();
    void mine();
    void join(std::size_t index);
    std::vector<PeerId> eligible_peers(PeerId self, bool need_history) const;
    void connect_fresh(PeerId node, bool first_attempt);
    void sample_storage();
    bool converged() const;
    Metrics collect();

    Scenario scenario_;
    NetworkParams network_;
    Wallet wallet_;
    Rng rng_;
    std::vector<std::unique_ptr<Node>> nodes_;
    std::vector<Event> heap_;
    std::uint64_t seq_ = 0;
    std::uint64_t now_ = 0;
    std::uint64_t events_ = 0;
    std::set<std::pair<PeerId, PeerId>> links_;
    std::map<std::pair<PeerId, PeerId>, std::uint64_t> last_arrival_;
    std::vector<TrafficCounters> traffic_;
    std::map<std::size_t, std::size_t> join_node_;  // join event -> node id
    std::map<PeerId, bool> eclipsed_;

    bool mining_ = false;
    bool extra_mode_ = false;
    std::uint64_t blocks_mined_ = 0;
    std::uint64_t extra_blocks_ = 0;
    std::map<Hash256, std::shared_ptr<const Block>> registry_;
    std::vector<StorageSample> samples_;
    std::vector<const Block*> best_chain_;
    bool ran_ = false;
};

Metrics run(const Scenario& scenario);

/// One independent run per seed; results follow `seeds` order. The OpenMP
/// version runs seeds concurrently, the serial one is the reference.
std::vector<Metrics> run_batch(const Scenario& base, std::span<const std::uint64_t> seeds);
std::vector<Metrics> run_batch_serial(const Scenario& base, std::span<const std::uint64_t> seeds);

}  // namespace coinprune
