#pragma once
// Simulator input: population, protocol parameters, workload and joins.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "coinprune/node.hpp"

namespace coinprune {

class ScenarioError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Each block carries txs_per_block transactions; each spends
/// max(1, round(spend_ratio * outputs_per_tx)) existing outputs and creates
/// outputs_per_tx new ones.
struct Workload {
    std::uint32_t txs_per_block = 8;
    std::uint32_t outputs_per_tx = 3;
    double spend_ratio = 0.67;
    std::uint64_t fee = 1000;

    std::uint32_t inputs_per_tx() const;
};

/// Per-message delay drawn uniformly from [min, max] event-time units.
struct LatencyModel {
    std::uint64_t min = 10;
    std::uint64_t max = 150;
};

struct JoinEvent {
    std::uint64_t time = 0;
    NodeConfig node;
    bool eclipse = false;  // first neighbor set is adversaries only
};

struct Scenario {
    std::string name = "scenario";
    std::uint64_t seed = 1;
    std::vector<NodeConfig> nodes;
    PulseParams pulse;
    std::uint32_t decision_depth = 2;
    std::size_t chunk_limit = 16384;
    std::uint32_t chain_length = 300;
    std::uint64_t block_interval = 600;
    Workload workload;
    LatencyModel latency;
    std::vector<JoinEvent> join_events;
    std::uint32_t max_retries = 5;
    std::uint32_t storage_sample_every = 16;
    std::uint32_t max_extra_blocks = 32;
    std::uint32_t magic = p2p::kDefaultMagic;
    ChainParams chain;

    /// Throws ScenarioError describing the first problem found.
    void validate() const;
};

enum class AdversaryKind { InvalidReaffirmer, ChunkTamperer, EclipseNeighbors };
std::string_view to_string(AdversaryKind kind);
/// Throws ScenarioError on unknown names.
AdversaryKind adversary_from_string(std::string_view s);

/// INVALID_REAFFIRMER turns the first honest CoinPrune miner into an
/// adversary; CHUNK_TAMPERER makes the first honest serving full node flip
/// a byte in every chunk it serves; ECLIPSE_NEIGHBORS pins the first
/// un-eclipsed CoinPrune joiner's initial neighbors to adversaries.
Scenario inject_adversary(Scenario scenario, AdversaryKind kind);

Scenario parse_scenario(const nlohmann::json& doc);
Scenario load_scenario(const std::filesystem::path& path);
nlohmann::json scenario_to_json(const Scenario& s);

}  // namespace coinprune
