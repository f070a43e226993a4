#pragma once
// Joining-node bootstrap as an explicit state machine. The driver feeds it
// message arrivals and timeouts and executes the actions it returns; the
// machine itself does no I/O and owns no clock.
//
//   ACQUIRE_SNAPSHOT -> FETCH_HEADERS -> FETCH_CHAINTAIL -> VERIFYING -> ACCEPTED
//          \________________\_________________\______________\-----> ABORTED (retry)

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "coinprune/p2p.hpp"
#include "coinprune/reaffirm.hpp"
#include "coinprune/snapshot.hpp"
#include "coinprune/validation.hpp"

namespace coinprune {

using PeerId = std::uint32_t;

/// Absolute majority over all of `advertisements` (a missing advertisement
/// counts against every id).
std::optional<SnapshotId> choose_snapshot(const std::map<PeerId, std::optional<SnapshotId>>& advertisements);

enum class BootstrapPhase { AcquireSnapshot, FetchHeaders, FetchChaintail, Verifying, Accepted, Aborted };
std::string_view to_string(BootstrapPhase phase);

struct BootstrapConfig {
    ChainParams chain;
    PulseParams pulse;
    std::uint32_t decision_depth = 2;
    BlockHeader genesis_header;
    std::uint32_t max_retries = 5;
    std::uint64_t timeout = 600;
};

namespace bootstrap_event {
/// Handshakes are done; these are the CoinPrune-capable neighbors.
struct Start {
    std::vector<PeerId> neighbors;
};
struct StateAdvert {
    PeerId peer;
    p2p::Inv inv;
};
struct ChunkArrived {
    PeerId peer;
    p2p::StateChunk chunk;
};
struct HeadersArrived {
    PeerId peer;
    p2p::Headers headers;
};
struct BlockArrived {
    PeerId peer;
    Block block;
};
struct Timeout {
    std::uint64_t token;
};
}  // namespace bootstrap_event

using BootstrapEvent = std::variant<bootstrap_event::Start, bootstrap_event::StateAdvert, bootstrap_event::ChunkArrived,
                                    bootstrap_event::HeadersArrived, bootstrap_event::BlockArrived,
                                    bootstrap_event::Timeout>;

namespace bootstrap_action {
struct Send {
    PeerId peer;
    p2p::Message message;
};
struct ArmTimer {
    std::uint64_t token;
    std::uint64_t delay;
};
struct Ban {
    PeerId peer;
};
/// The attempt failed; the driver should find a fresh neighbor set and
/// deliver a new Start.
struct Reconnect {};
/// Terminal: either accepted or out of retries.
struct Finished {
    bool accepted;
};
}  // namespace bootstrap_action

using BootstrapAction = std::variant<bootstrap_action::Send, bootstrap_action::ArmTimer, bootstrap_action::Ban,
                                     bootstrap_action::Reconnect, bootstrap_action::Finished>;

/// Everything a joiner needs to become a full CoinPrune node.
struct BootstrapResult {
    Snapshot snapshot;
    SnapshotId id;
    UtxoSet snapshot_utxo;                  // state at the snapshot height
    std::vector<p2p::HeaderEntry> headers;  // heights 0..tip
    std::vector<Block> chaintail;           // heights snapshot+1..tip
    UtxoSet tip_utxo;
    PulseOutcome outcome;
};

class Bootstrap {
public:
    explicit Bootstrap(BootstrapConfig config) : config_(std::move(config)) {}

    std::vector<BootstrapAction> step(const BootstrapEvent& event);

    BootstrapPhase phase() const { return phase_; }
    std::uint32_t retries() const { return retries_; }
    std::uint32_t attempts() const { return attempt_; }
    bool finished() const { return finished_; }
    const std::optional<SnapshotId>& chosen() const { return chosen_; }
    const std::set<PeerId>& banned() const { return banned_; }
    const std::string& last_abort_reason() const { return abort_reason_; }
    /// Set once phase() == Accepted.
    const std::optional<BootstrapResult>& result() const { return result_; }

private:
    using Actions = std::vector<BootstrapAction>;

    void on_start(const bootstrap_event::Start& e, Actions& out);
    void on_advert(const bootstrap_event::StateAdvert& e, Actions& out);
    void on_chunk(const bootstrap_event::ChunkArrived& e, Actions& out);
    void on_headers(const bootstrap_event::HeadersArrived& e, Actions& out);
    void on_block(const bootstrap_event::BlockArrived& e, Actions& out);
    void on_timeout(const bootstrap_event::Timeout& e, Actions& out);

    void conclude_acquire(Actions& out);
    void finish_snapshot(Actions& out);
    void request_tail(Actions& out);
    void verify(Actions& out);
    void abort(const std::string& reason, Actions& out);
    void arm(Actions& out);

    BootstrapConfig config_;
    BootstrapPhase phase_ = BootstrapPhase::Aborted;
    bool finished_ = false;
    std::uint32_t attempt_ = 0;
    std::uint32_t retries_ = 0;
    std::uint64_t timer_token_ = 0;
    std::string abort_reason_;

    std::vector<PeerId> neighbors_;
    std::set<PeerId> awaiting_adverts_;
    std::map<PeerId, std::optional<SnapshotId>> adverts_;
    std::map<PeerId, std::vector<Hash256>> layers_;
    std::optional<SnapshotId> chosen_;
    std::vector<PeerId> advertisers_;
    std::vector<Hash256> layer_;
    std::vector<std::optional<Bytes>> pieces_;
    std::map<std::uint32_t, PeerId> piece_source_;
    std::set<PeerId> blamed_;
    std::set<PeerId> banned_;

    std::optional<Snapshot> snapshot_;
    UtxoSet snapshot_utxo_;
    PeerId header_peer_ = 0;
    std::vector<p2p::HeaderEntry> headers_;
    std::map<Hash256, std::uint32_t> tail_wanted_;
    std::vector<std::optional<Block>> tail_;

    std::optional<BootstrapResult> result_;
};

}  // namespace coinprune
