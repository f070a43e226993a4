#pragma once
// Simulation output and its two on-disk forms: one JSON record per line
// (metrics.ndjson) and a per-node summary table (summary.csv).

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "coinprune/node.hpp"
#include "coinprune/prune_store.hpp"
#include "coinprune/reaffirm.hpp"

namespace coinprune {

struct TrafficCounters {
    std::uint64_t bytes_in = 0;
    std::uint64_t bytes_out = 0;
    std::map<std::string, std::uint64_t> received;  // by command
    std::map<std::string, std::uint64_t> sent;
};

struct StorageSample {
    std::uint64_t time = 0;
    PeerId node = 0;
    std::uint32_t height = 0;
    StorageReport report;
};

struct PulseRecord {
    std::uint32_t pulse_height = 0;
    PulseOutcome outcome;
    SnapshotId honest_id;
    std::uint32_t honest_markers = 0;
    std::uint32_t other_markers = 0;
};

struct JoinRecord {
    std::uint64_t join_time = 0;
    std::optional<std::uint64_t> done_time;
    std::string outcome;
    std::uint32_t retries = 0;
    std::optional<std::uint64_t> events_to_accept;
    std::optional<AcceptedRecord> snapshot;
    std::string last_abort;
    bool eclipsed = false;
};

struct NodeMetrics {
    PeerId id = 0;
    std::string role;        // as configured
    std::string final_role;  // joiners end as COINPRUNE_FULL
    bool honest = true;
    std::string misbehavior;
    double mining_power = 0;
    std::uint32_t tip_height = 0;
    Hash256 tip_id;
    StorageReport storage;
    TrafficCounters traffic;
    std::vector<AcceptedRecord> accepted;
    std::optional<std::string> failure;
    bool utxo_matches_oracle = false;
    std::uint64_t rejected_blocks = 0;
    std::optional<JoinRecord> join;
};

struct Metrics {
    nlohmann::json scenario;
    std::string name;
    std::uint64_t seed = 0;
    std::uint32_t tip_height = 0;
    Hash256 tip_id;
    bool converged = false;
    std::uint64_t blocks_mined = 0;
    std::uint64_t extra_blocks = 0;
    std::uint64_t rejected_blocks = 0;
    std::uint32_t invalid_acceptances = 0;
    std::uint64_t bytes_sent = 0;
    std::uint64_t bytes_received = 0;
    std::uint64_t chain_body_bytes = 0;  // serialized bodies of the final best chain
    std::uint64_t events = 0;
    std::vector<NodeMetrics> nodes;
    std::vector<StorageSample> samples;
    std::vector<PulseRecord> pulses;
};

std::string to_ndjson(const Metrics& m);
std::string to_summary_csv(const Metrics& m);
/// Writes metrics.ndjson and summary.csv into `dir`, creating it if needed.
void write_metrics(const Metrics& m, const std::filesystem::path& dir);

}  // namespace coinprune
