#include "coinprune/reaffirm.hpp"

#include <algorithm>
#include <stdexcept>

namespace coinprune {

void PulseParams::validate() const {
    if (delta_r == 0 || delta_r >= delta_p)
        throw std::invalid_argument("pulse parameters require 0 < delta_r < delta_p");
    if (k == 0) throw std::invalid_argument("acceptance threshold k must be >= 1");
}

Bytes encode_marker(const SnapshotId& id) {
    Bytes out(kMarkerPrefix.begin(), kMarkerPrefix.end());
    const std::string hex = id.hex();
    out.insert(out.end(), hex.begin(), hex.end());
    out.push_back('/');
    return out;
}

std::optional<SnapshotId> parse_marker(ByteView data) {
    const std::string_view text(reinterpret_cast<const char*>(data.data()), data.size());
    for (std::size_t pos = text.find(kMarkerPrefix); pos != std::string_view::npos;
         pos = text.find(kMarkerPrefix, pos + 1)) {
        if (text.size() - pos < kMarkerSize) break;
        if (text[pos + kMarkerSize - 1] != '/') continue;
        if (auto h = Hash256::from_hex(text.substr(pos + kMarkerPrefix.size(), 2 * Hash256::kSize))) return SnapshotId{*h};
    }
    return std::nullopt;
}

std::optional<std::uint32_t> pulse_height_for(std::uint32_t height, const PulseParams& params) {
    if (params.delta_p == 0 || height < params.delta_p) return std::nullopt;
    return height - height % params.delta_p;
}

bool in_window(std::uint32_t height, std::uint32_t pulse_height, const PulseParams& params) {
    return height > pulse_height && static_cast<std::uint64_t>(height) <= static_cast<std::uint64_t>(pulse_height) + params.delta_r;
}

ReaffirmationTally tally(std::span<const ChainBlockRef> blocks, std::uint32_t pulse_height, const PulseParams& params) {
    ReaffirmationTally out{pulse_height, {}};
    for (const auto& ref : blocks) {
        if (ref.block == nullptr || !in_window(ref.height, pulse_height, params)) continue;
        if (ref.block->transactions.empty()) continue;
        const auto& coinbase = ref.block->transactions.front();
        if (!coinbase.coinbase_data) continue;
        if (auto id = parse_marker(*coinbase.coinbase_data)) ++out.counts[*id];
    }
    return out;
}

std::string_view to_string(PulseOutcome::Kind kind) {
    switch (kind) {
        case PulseOutcome::Kind::Accepted: return "ACCEPTED";
        case PulseOutcome::Kind::InvalidPulse: return "INVALID_PULSE";
        case PulseOutcome::Kind::Ambiguous: return "AMBIGUOUS";
    }
    return "?";
}

PulseOutcome decide(const ReaffirmationTally& t, const PulseParams& params) {
    const SnapshotId* best = nullptr;
    std::uint32_t best_count = 0;
    bool tied = false;
    for (const auto& [id, count] : t.counts) {
        if (count > best_count) {
            best = &id;
            best_count = count;
            tied = false;
        } else if (count == best_count && best != nullptr) {
            tied = true;
        }
    }
    if (best == nullptr || best_count < params.k) return PulseOutcome::invalid();
    if (tied) return PulseOutcome::ambiguous();
    return PulseOutcome::accepted(*best);
}

}  // namespace coinprune
