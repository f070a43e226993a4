#pragma once
// On-chain reaffirmation markers and pulse/window bookkeeping.
//
// Marker grammar (75 ASCII bytes, strict):  "CoinPrune/" <64 lowercase hex> "/"
// Pulses fall on positive multiples of delta_p; a pulse's window holds the
// heights (pulse, pulse + delta_r].

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string_view>

#include "coinprune/chain.hpp"
#include "coinprune/snapshot.hpp"

namespace coinprune {

inline constexpr std::string_view kMarkerPrefix = "CoinPrune/";
inline constexpr std::size_t kMarkerSize = 75;

struct PulseParams {
    std::uint32_t delta_p = 64;
    std::uint32_t delta_r = 16;
    std::uint32_t k = 3;

    /// Throws std::invalid_argument unless 0 < delta_r < delta_p and k >= 1.
    void validate() const;
    bool operator==(const PulseParams&) const = default;
};

Bytes encode_marker(const SnapshotId& id);
/// First well-formed marker in untrusted coinbase bytes. Anything else,
/// including uppercase hex, yields nullopt; never throws.
std::optional<SnapshotId> parse_marker(ByteView coinbase_data);

std::optional<std::uint32_t> pulse_height_for(std::uint32_t height, const PulseParams& params);
bool in_window(std::uint32_t height, std::uint32_t pulse_height, const PulseParams& params);
inline bool is_pulse(std::uint32_t height, const PulseParams& params) {
    return height > 0 && height % params.delta_p == 0;
}

struct ReaffirmationTally {
    std::uint32_t pulse_height = 0;
    std::map<SnapshotId, std::uint32_t> counts;

    bool operator==(const ReaffirmationTally&) const = default;
};

struct ChainBlockRef {
    std::uint32_t height = 0;
    const Block* block = nullptr;
};

/// Counts the first marker of each block's coinbase; heights outside the
/// pulse's window are skipped.
ReaffirmationTally tally(std::span<const ChainBlockRef> blocks, std::uint32_t pulse_height, const PulseParams& params);

struct PulseOutcome {
    enum class Kind { Accepted, InvalidPulse, Ambiguous };

    Kind kind = Kind::InvalidPulse;
    std::optional<SnapshotId> id;

    static PulseOutcome accepted(const SnapshotId& id) { return {Kind::Accepted, id}; }
    static PulseOutcome invalid() { return {Kind::InvalidPulse, std::nullopt}; }
    static PulseOutcome ambiguous() { return {Kind::Ambiguous, std::nullopt}; }

    bool is_accepted() const { return kind == Kind::Accepted; }
    bool operator==(const PulseOutcome&) const = default;
};

std::string_view to_string(PulseOutcome::Kind kind);

/// Unique maximum with count >= k is Accepted; a tied maximum >= k is
/// Ambiguous; anything else is InvalidPulse.
PulseOutcome decide(const ReaffirmationTally& tally, const PulseParams& params);

}  // namespace coinprune
