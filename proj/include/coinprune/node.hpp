#pragma once
// Event-driven node. One class covers every role; behavior differs in
// whether the node tracks pulses, emits markers, prunes, and how it joins.
// All I/O goes through NodeEnv, so a node is a deterministic function of
// the events it is fed.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "coinprune/bootstrap.hpp"
#include "coinprune/p2p.hpp"
#include "coinprune/prune_store.hpp"
#include "coinprune/reaffirm.hpp"
#include "coinprune/snapshot.hpp"
#include "coinprune/validation.hpp"

namespace coinprune {

enum class Role { LegacyFull, CoinPruneFull, CoinPruneMiner, AdversaryMiner, Archival, Joining };
enum class Misbehavior { None, ReaffirmInvalid, TamperChunks };

std::string_view to_string(Role role);
std::optional<Role> role_from_string(std::string_view s);
std::string_view to_string(Misbehavior m);
std::optional<Misbehavior> misbehavior_from_string(std::string_view s);

/// Everything except LEGACY_FULL speaks the CoinPrune extensions.
inline bool coinprune_aware(Role r) { return r != Role::LegacyFull; }

struct NodeConfig {
    Role role = Role::LegacyFull;
    PulseParams pulse;
    std::uint32_t decision_depth = 2;
    std::size_t chunk_limit = kDefaultChunkLimit;
    double mining_power = 0;
    std::uint32_t neighbor_count = 8;
    bool honest = true;
    Misbehavior misbehavior = Misbehavior::None;

    /// Throws std::invalid_argument on inconsistent combinations.
    void validate() const;
};

/// Network-wide constants every node is built with.
struct NetworkParams {
    ChainParams chain;
    Block genesis;
    std::uint64_t timeout = 600;
    std::uint32_t max_retries = 5;
};

class NodeEnv {
public:
    virtual ~NodeEnv() = default;
    virtual std::uint64_t now() const = 0;
    virtual void send(PeerId from, PeerId to, const p2p::Message& message) = 0;
    virtual void arm_timer(PeerId node, std::uint64_t delay, std::uint64_t token) = 0;
    virtual void disconnect(PeerId a, PeerId b) = 0;
    /// Drop every link of `node` and connect a fresh neighbor set.
    virtual void request_neighbors(PeerId node) = 0;
};

enum class JoinStatus { None, Bootstrapping, Accepted, Failed, LegacySyncing, Synced };
std::string_view to_string(JoinStatus s);

struct AcceptedRecord {
    std::uint32_t pulse_height = 0;
    SnapshotId id;
    bool operator==(const AcceptedRecord&) const = default;
};

struct JoinInfo {
    std::uint64_t join_time = 0;
    std::optional<std::uint64_t> done_time;
    std::uint64_t events = 0;            // events handled until done (or so far)
    std::optional<std::uint64_t> events_to_accept;
    std::uint32_t retries = 0;
    std::string last_abort;
};

class Node {
public:
    Node(PeerId id, NodeConfig config, const NetworkParams& params, NodeEnv& env, std::uint64_t seed, bool joining);

    PeerId id() const { return id_; }
    const NodeConfig& config() const { return config_; }
    Role role() const { return role_; }

    // -- link and message events ------------------------------------------
    void on_connect(PeerId peer, bool outbound);
    void on_disconnect(PeerId peer);
    void on_message(PeerId from, const p2p::Message& message);
    void on_timer(std::uint64_t token);

    // -- mining -----------------------------------------------------------
    /// Coinbase data for the next template on the current tip: u32le(height)
    /// followed by a marker while a window is open for a candidate.
    Bytes miner_on_block() const;
    /// Builds and grinds a block on the current tip paying `reward_script`.
    Block make_block(std::uint32_t timestamp, std::vector<Transaction> txs, std::uint64_t fees,
                     const Bytes& reward_script) const;
    /// Feeds a locally mined block through the normal acceptance path.
    void submit_block(const Block& block);

    // -- state ------------------------------------------------------------
    bool operational() const;
    bool failed() const { return failure_.has_value(); }
    const std::optional<std::string>& failure() const { return failure_; }
    std::uint32_t tip_height() const { return static_cast<std::uint32_t>(main_.size() - 1); }
    const Hash256& tip_id() const { return main_.back(); }
    const std::vector<Hash256>& main_chain() const { return main_; }
    const NodeStore& store() const { return store_; }
    const UtxoSet& utxo() const { return store_.utxo(); }
    std::uint64_t services() const;
    std::uint64_t rejected_blocks() const { return rejected_blocks_; }
    const std::vector<AcceptedRecord>& accepted() const { return accepted_; }
    const std::map<std::uint32_t, PulseOutcome>& decided() const { return decided_; }
    std::optional<SnapshotId> candidate(std::uint32_t pulse_height) const;
    std::optional<SnapshotId> crafted(std::uint32_t pulse_height) const;
    JoinStatus join_status() const { return join_status_; }
    const JoinInfo& join_info() const { return join_; }
    const Bootstrap* bootstrap() const { return bootstrap_.get(); }
    std::set<PeerId> banned_peers() const;
    const std::set<PeerId>& tried_peers() const { return tried_; }
    std::vector<PeerId> peers() const;

    /// The snapshot this node answers GETSTATE with, if any.
    const StoredSnapshot* advertised_snapshot() const;

    /// Reaction to a closed window: on Accepted for the node's own candidate
    /// it marks the snapshot accepted and prunes up to it; anything else
    /// leaves storage untouched.
    void on_pulse_outcome(std::uint32_t pulse_height, const PulseOutcome& outcome);

private:
    struct Entry {
        BlockHeader header;
        std::uint32_t height = 0;
        Work work;
        std::uint64_t arrival = 0;
        std::shared_ptr<const Block> body;
        bool invalid = false;
    };

    struct Peer {
        bool outbound = false;
        bool version_sent = false;
        bool version_received = false;
        bool verack_received = false;
        p2p::VersionPayload remote;
        p2p::Capabilities caps;
        std::unordered_set<Hash256, Hash256Hasher> known;
        bool ready() const { return version_received && verack_received; }
    };

    struct Checkpoint {
        Hash256 id;
        UtxoSet utxo;
    };

    // handshake and relay
    p2p::VersionPayload local_version() const;
    void send(PeerId to, const p2p::Message& m);
    void on_version(PeerId from, const p2p::VersionPayload& v);
    void on_verack(PeerId from);
    void on_peer_ready(PeerId peer);
    void on_inv(PeerId from, const p2p::Inv& inv);
    void on_getdata(PeerId from, const p2p::GetData& req);
    void on_getheaders(PeerId from, const p2p::GetHeaders& req);
    void on_getstate(PeerId from);
    void request_block(PeerId from, const Hash256& id);
    void announce_tip();

    // chain state
    void process_block(std::optional<PeerId> from, std::shared_ptr<const Block> block);
    bool accept_into_tree(std::optional<PeerId> from, const std::shared_ptr<const Block>& block);
    void activate_best(const Hash256& candidate);
    bool connect_block(const Hash256& id);
    void on_connected(std::uint32_t height);
    void evaluate_pulse(std::uint32_t pulse_height);
    void fail(const std::string& reason);
    bool on_main_chain(const Hash256& id, std::uint32_t height) const;

    // joining
    void maybe_start_join();
    void start_join_attempt();
    void arm_handshake_timer();
    void run_bootstrap(const BootstrapEvent& event);
    void adopt_bootstrap();
    void legacy_start();
    void legacy_on_headers(PeerId from, const p2p::Headers& h);
    void legacy_request_missing();
    void legacy_check_done();
    void count_event();

    PeerId id_;
    NodeConfig config_;
    Role role_;
    const NetworkParams& params_;
    NodeEnv& env_;
    std::mt19937_64 rng_;

    std::map<PeerId, Peer> peers_;
    std::unordered_map<Hash256, Entry, Hash256Hasher> tree_;
    std::vector<Hash256> main_;
    std::uint64_t arrivals_ = 0;
    std::unordered_map<Hash256, std::vector<std::shared_ptr<const Block>>, Hash256Hasher> orphans_;
    std::unordered_set<Hash256, Hash256Hasher> orphan_ids_;
    std::unordered_map<Hash256, std::uint64_t, Hash256Hasher> in_flight_;
    NodeStore store_;
    std::map<std::uint32_t, Checkpoint> checkpoints_;
    std::uint32_t base_height_ = 0;

    std::map<std::uint32_t, SnapshotId> candidates_;
    std::map<std::uint32_t, StoredSnapshot> crafted_;
    std::map<std::uint32_t, PulseOutcome> decided_;
    std::vector<AcceptedRecord> accepted_;
    std::uint64_t rejected_blocks_ = 0;
    std::optional<std::string> failure_;

    JoinStatus join_status_ = JoinStatus::None;
    JoinInfo join_;
    std::unique_ptr<Bootstrap> bootstrap_;
    bool awaiting_start_ = false;
    std::uint64_t handshake_token_ = 0;
    std::set<PeerId> tried_;
    std::vector<std::pair<PeerId, Hash256>> stashed_invs_;
    std::vector<PeerId> sync_peers_;
    std::vector<p2p::HeaderEntry> sync_headers_;
    std::uint32_t sync_target_ = 0;
    std::uint32_t sync_rounds_ = 0;
    std::uint64_t sync_token_ = 0;
    bool sync_headers_done_ = false;
};

/// Free-function form of Node::miner_on_block.
inline Bytes miner_on_block(const Node& node) { return node.miner_on_block(); }

}  // namespace coinprune
