#pragma once
// Wire format. Every message is framed as
//
//   magic(4) || command(12, ASCII, zero padded) || length(4) || payload
//
// with little-endian integers and u32-prefixed lists. No checksum: links in
// the simulator are reliable.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <variant>
#include <vector>

#include "coinprune/chain.hpp"
#include "coinprune/snapshot.hpp"

namespace coinprune::p2p {

inline constexpr std::uint32_t kDefaultMagic = 0x43505231;
inline constexpr std::size_t kFrameHeaderSize = 20;
inline constexpr std::uint32_t kProtocolVersion = 70001;
inline constexpr std::uint32_t kMinProtocolVersion = 70001;
inline constexpr std::size_t kMaxHeadersPerMessage = 2000;
inline constexpr std::size_t kMaxInvItems = 50000;
inline constexpr std::size_t kMaxPayload = 2 * 1024 * 1024;

inline constexpr std::uint64_t kNodeNetwork = 1ull << 0;
inline constexpr std::uint64_t kNodeCoinPrune = 1ull << 24;

enum class Command { Version, Verack, GetHeaders, Headers, GetData, Block, Inv, GetState, StateChunk };

std::string_view command_name(Command c);

enum class InvKind : std::uint32_t { Block = 2, State = 0x100 };

struct InvItem {
    InvKind kind = InvKind::Block;
    Hash256 hash;
    bool operator==(const InvItem&) const = default;
};

struct VersionPayload {
    std::uint32_t protocol_version = kProtocolVersion;
    std::uint64_t services = 0;
    std::uint32_t best_height = 0;
    bool operator==(const VersionPayload&) const = default;
};

struct Verack {
    bool operator==(const Verack&) const = default;
};

struct GetHeaders {
    std::vector<Hash256> locator;
    bool operator==(const GetHeaders&) const = default;
};

/// A header plus the block's transaction count, so header-synced peers can
/// persist complete block metadata without the body.
struct HeaderEntry {
    BlockHeader header;
    std::uint32_t tx_count = 0;
    bool operator==(const HeaderEntry&) const = default;
};

struct Headers {
    std::vector<HeaderEntry> entries;
    bool operator==(const Headers&) const = default;
};

struct GetData {
    std::vector<InvItem> items;
    bool operator==(const GetData&) const = default;
};

struct BlockMessage {
    Block block;
    bool operator==(const BlockMessage&) const = default;
};

struct Inv {
    std::vector<InvItem> items;
    bool operator==(const Inv&) const = default;
};

struct GetState {
    bool operator==(const GetState&) const = default;
};

/// Index 0 carries the snapshot header, index i >= 1 carries chunk i.
struct StateChunk {
    SnapshotId snapshot;
    std::uint32_t index = 0;
    Bytes data;
    bool operator==(const StateChunk&) const = default;
};

// Alternative order matches Command.
using Message = std::variant<VersionPayload, Verack, GetHeaders, Headers, GetData, BlockMessage, Inv, GetState, StateChunk>;

inline Command command_of(const Message& m) { return static_cast<Command>(m.index()); }

class CodecError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Disconnect signal raised during version negotiation.
class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

Bytes encode(const Message& message, std::uint32_t magic = kDefaultMagic);
/// Decodes exactly one frame occupying all of `bytes`; throws CodecError.
Message decode(ByteView bytes, std::uint32_t magic = kDefaultMagic);

/// INV carrying chunk_hashes(snapshot) as STATE items, header first.
Inv state_inventory(const Snapshot& snapshot);
/// Identifier a receiver derives from an advertised STATE inventory.
std::optional<SnapshotId> advertised_snapshot(const Inv& inv);
/// Looks up `item_hash` among the snapshot's layer hashes and returns the
/// matching piece, or nullopt if the snapshot has no such piece.
std::optional<StateChunk> serve_state_item(const Snapshot& snapshot, const SnapshotId& id, const Hash256& item_hash);
/// Rebuilds a snapshot from pieces indexed 0..n. Throws CodecError on gaps.
Snapshot assemble_snapshot(const std::vector<std::optional<Bytes>>& pieces);

struct Capabilities {
    bool coinprune = false;     // GETSTATE and STATE items may be exchanged
    bool full_history = false;  // remote serves historic block bodies

    bool operator==(const Capabilities&) const = default;
};

/// Throws ProtocolError if the remote is below the minimum protocol version.
Capabilities negotiate(const VersionPayload& local, const VersionPayload& remote);

}  // namespace coinprune::p2p
