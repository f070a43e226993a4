#include "coinprune/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace coinprune {

using nlohmann::json;

std::uint32_t Workload::inputs_per_tx() const {
    const auto r = static_cast<std::uint32_t>(std::lround(spend_ratio * outputs_per_tx));
    return std::max<std::uint32_t>(1, r);
}

void Scenario::validate() const {
    try {
        pulse.validate();
    } catch (const std::invalid_argument& e) {
        throw ScenarioError(std::string("pulse: ") + e.what());
    }
    if (nodes.size() < 2) throw ScenarioError("need at least two established nodes");
    double power = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto& n = nodes[i];
        if (n.role == Role::Joining) throw ScenarioError("node " + std::to_string(i) + ": JOINING belongs in join_events");
        try {
            n.validate();
        } catch (const std::invalid_argument& e) {
            throw ScenarioError("node " + std::to_string(i) + ": " + e.what());
        }
        power += n.mining_power;
    }
    if (!(power > 0)) throw ScenarioError("total mining power must be positive");
    if (chain_length == 0) throw ScenarioError("chain_length must be positive");
    if (block_interval < 2) throw ScenarioError("block_interval must be at least 2");
    if (latency.min == 0 || latency.min > latency.max) throw ScenarioError("latency needs 0 < min <= max");
    if (chunk_limit < 128 || chunk_limit > kDefaultChunkLimit) throw ScenarioError("chunk_limit out of range");
    if (workload.outputs_per_tx == 0) throw ScenarioError("outputs_per_tx must be positive");
    if (!(workload.spend_ratio >= 0 && workload.spend_ratio <= 1)) throw ScenarioError("spend_ratio must lie in [0, 1]");
    const std::uint64_t tx_bytes = 9 + 72ull * workload.inputs_per_tx() + 30ull * workload.outputs_per_tx;
    if (tx_bytes * workload.txs_per_block + 1024 > kMaxBlockSize) throw ScenarioError("workload exceeds the block size limit");
    if (storage_sample_every == 0) throw ScenarioError("storage_sample_every must be positive");
    bool adversaries = false;
    for (const auto& n : nodes) adversaries |= !n.honest;
    for (std::size_t i = 0; i < join_events.size(); ++i) {
        const auto& j = join_events[i];
        if (j.node.role != Role::Joining && j.node.role != Role::LegacyFull)
            throw ScenarioError("join event " + std::to_string(i) + ": role must be JOINING or LEGACY_FULL");
        try {
            j.node.validate();
        } catch (const std::invalid_argument& e) {
            throw ScenarioError("join event " + std::to_string(i) + ": " + e.what());
        }
        if (j.node.mining_power > 0) throw ScenarioError("join event " + std::to_string(i) + ": joiners do not mine");
        if (j.eclipse && j.node.role != Role::Joining) throw ScenarioError("only CoinPrune joiners can be eclipsed");
        if (j.eclipse && !adversaries) throw ScenarioError("eclipse needs adversarial nodes to pin to");
    }
}

std::string_view to_string(AdversaryKind kind) {
    switch (kind) {
        case AdversaryKind::InvalidReaffirmer: return "INVALID_REAFFIRMER";
        case AdversaryKind::ChunkTamperer: return "CHUNK_TAMPERER";
        case AdversaryKind::EclipseNeighbors: return "ECLIPSE_NEIGHBORS";
    }
    return "?";
}

AdversaryKind adversary_from_string(std::string_view s) {
    for (auto k : {AdversaryKind::InvalidReaffirmer, AdversaryKind::ChunkTamperer, AdversaryKind::EclipseNeighbors})
        if (to_string(k) == s) return k;
    throw ScenarioError("unknown adversary kind '" + std::string(s) + "'");
}

Scenario inject_adversary(Scenario s, AdversaryKind kind) {
    switch (kind) {
        case AdversaryKind::InvalidReaffirmer:
            for (auto& n : s.nodes)
                if (n.role == Role::CoinPruneMiner && n.honest) {
                    n.role = Role::AdversaryMiner;
                    n.misbehavior = Misbehavior::ReaffirmInvalid;
                    n.honest = false;
                    return s;
                }
            throw ScenarioError("INVALID_REAFFIRMER needs an honest COINPRUNE_MINER to convert");
        case AdversaryKind::ChunkTamperer:
            for (Role wanted : {Role::CoinPruneFull, Role::Archival, Role::CoinPruneMiner})
                for (auto& n : s.nodes)
                    if (n.role == wanted && n.honest) {
                        n.misbehavior = Misbehavior::TamperChunks;
                        n.honest = false;
                        return s;
                    }
            throw ScenarioError("CHUNK_TAMPERER needs an honest CoinPrune node to convert");
        case AdversaryKind::EclipseNeighbors:
            for (auto& j : s.join_events)
                if (j.node.role == Role::Joining && !j.eclipse) {
                    j.eclipse = true;
                    return s;
                }
            throw ScenarioError("ECLIPSE_NEIGHBORS needs a CoinPrune join event");
    }
    throw ScenarioError("unknown adversary kind");
}

namespace {

const std::set<std::string> kTopKeys = {"name",        "seed",        "nodes",        "pulse",
                                        "decision_depth", "chunk_limit", "chain_length", "block_interval",
                                        "workload",    "latency",     "join_events",  "max_retries",
                                        "storage_sample_every", "max_extra_blocks", "magic", "subsidy",
                                        "bits",        "inject"};

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ScenarioError(std::string("field '") + key + "': " + e.what());
    }
}

NodeConfig parse_node(const json& j, const std::string& where) {
    if (!j.is_object()) throw ScenarioError(where + ": expected an object");
    NodeConfig n;
    const auto role = get_or<std::string>(j, "role", "");
    auto r = role_from_string(role);
    if (!r) throw ScenarioError(where + ": unknown role '" + role + "'");
    n.role = *r;
    n.mining_power = get_or<double>(j, "mining_power", 0.0);
    n.neighbor_count = get_or<std::uint32_t>(j, "neighbor_count", 8);
    const auto mb = get_or<std::string>(j, "misbehavior", "NONE");
    auto m = misbehavior_from_string(mb);
    if (!m) throw ScenarioError(where + ": unknown misbehavior '" + mb + "'");
    n.misbehavior = *m;
    n.honest = get_or<bool>(j, "honest", n.misbehavior == Misbehavior::None);
    for (const auto& [k, _] : j.items())
        if (k != "role" && k != "mining_power" && k != "neighbor_count" && k != "misbehavior" && k != "honest" &&
            k != "count" && k != "time" && k != "eclipse")
            throw ScenarioError(where + ": unknown field '" + k + "'");
    return n;
}

}  // namespace

Scenario parse_scenario(const json& doc) {
    if (!doc.is_object()) throw ScenarioError("scenario must be a JSON object");
    for (const auto& [k, _] : doc.items())
        if (!kTopKeys.contains(k)) throw ScenarioError("unknown field '" + k + "'");

    Scenario s;
    s.name = get_or<std::string>(doc, "name", s.name);
    s.seed = get_or<std::uint64_t>(doc, "seed", s.seed);
    s.decision_depth = get_or<std::uint32_t>(doc, "decision_depth", s.decision_depth);
    s.chunk_limit = get_or<std::size_t>(doc, "chunk_limit", s.chunk_limit);
    s.chain_length = get_or<std::uint32_t>(doc, "chain_length", s.chain_length);
    s.block_interval = get_or<std::uint64_t>(doc, "block_interval", s.block_interval);
    s.max_retries = get_or<std::uint32_t>(doc, "max_retries", s.max_retries);
    s.storage_sample_every = get_or<std::uint32_t>(doc, "storage_sample_every", s.storage_sample_every);
    s.max_extra_blocks = get_or<std::uint32_t>(doc, "max_extra_blocks", s.max_extra_blocks);
    s.magic = get_or<std::uint32_t>(doc, "magic", s.magic);
    s.chain.subsidy = get_or<std::uint64_t>(doc, "subsidy", s.chain.subsidy);
    if (doc.contains("bits")) {
        const auto hex = get_or<std::string>(doc, "bits", "");
        try {
            std::size_t used = 0;
            s.chain.bits = static_cast<std::uint32_t>(std::stoul(hex, &used, 16));
            if (used != hex.size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            throw ScenarioError("field 'bits': expected compact target as hex");
        }
        try {
            target_from_bits(s.chain.bits);
        } catch (const ChainError& e) {
            throw ScenarioError(std::string("field 'bits': ") + e.what());
        }
    }

    if (doc.contains("pulse")) {
        const auto& p = doc.at("pulse");
        s.pulse.delta_p = get_or<std::uint32_t>(p, "delta_p", s.pulse.delta_p);
        s.pulse.delta_r = get_or<std::uint32_t>(p, "delta_r", s.pulse.delta_r);
        s.pulse.k = get_or<std::uint32_t>(p, "k", s.pulse.k);
    }
    if (doc.contains("workload")) {
        const auto& w = doc.at("workload");
        s.workload.txs_per_block = get_or<std::uint32_t>(w, "txs_per_block", s.workload.txs_per_block);
        s.workload.outputs_per_tx = get_or<std::uint32_t>(w, "outputs_per_tx", s.workload.outputs_per_tx);
        s.workload.spend_ratio = get_or<double>(w, "spend_ratio", s.workload.spend_ratio);
        s.workload.fee = get_or<std::uint64_t>(w, "fee", s.workload.fee);
    }
    if (doc.contains("latency")) {
        const auto& l = doc.at("latency");
        s.latency.min = get_or<std::uint64_t>(l, "min", s.latency.min);
        s.latency.max = get_or<std::uint64_t>(l, "max", s.latency.max);
    }

    if (!doc.contains("nodes") || !doc.at("nodes").is_array()) throw ScenarioError("'nodes' must be an array");
    std::size_t idx = 0;
    for (const auto& spec : doc.at("nodes")) {
        const std::string where = "nodes[" + std::to_string(idx++) + "]";
        NodeConfig n = parse_node(spec, where);
        const auto count = get_or<std::uint32_t>(spec, "count", 1);
        if (count == 0) throw ScenarioError(where + ": count must be positive");
        for (std::uint32_t c = 0; c < count; ++c) s.nodes.push_back(n);
    }
    if (doc.contains("join_events")) {
        if (!doc.at("join_events").is_array()) throw ScenarioError("'join_events' must be an array");
        idx = 0;
        for (const auto& spec : doc.at("join_events")) {
            const std::string where = "join_events[" + std::to_string(idx++) + "]";
            JoinEvent j;
            j.node = parse_node(spec, where);
            if (!spec.contains("time")) throw ScenarioError(where + ": missing 'time'");
            j.time = get_or<std::uint64_t>(spec, "time", 0);
            j.eclipse = get_or<bool>(spec, "eclipse", false);
            s.join_events.push_back(j);
        }
    }
    for (auto& n : s.nodes) {
        n.pulse = s.pulse;
        n.decision_depth = s.decision_depth;
        n.chunk_limit = s.chunk_limit;
    }
    for (auto& j : s.join_events) {
        j.node.pulse = s.pulse;
        j.node.decision_depth = s.decision_depth;
        j.node.chunk_limit = s.chunk_limit;
    }
    if (doc.contains("inject")) {
        if (!doc.at("inject").is_array()) throw ScenarioError("'inject' must be an array of adversary kinds");
        for (const auto& k : doc.at("inject")) {
            if (!k.is_string()) throw ScenarioError("'inject' entries must be strings");
            s = inject_adversary(std::move(s), adversary_from_string(k.get<std::string>()));
        }
    }
    s.validate();
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("cannot open scenario file " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ScenarioError("scenario " + path.string() + " is not valid JSON: " + e.what());
    }
    return parse_scenario(doc);
}

json scenario_to_json(const Scenario& s) {
    auto node_json = [](const NodeConfig& n) {
        return json{{"role", to_string(n.role)},
                    {"mining_power", n.mining_power},
                    {"neighbor_count", n.neighbor_count},
                    {"misbehavior", to_string(n.misbehavior)},
                    {"honest", n.honest}};
    };
    json nodes = json::array();
    for (const auto& n : s.nodes) nodes.push_back(node_json(n));
    json joins = json::array();
    for (const auto& j : s.join_events) {
        auto o = node_json(j.node);
        o["time"] = j.time;
        o["eclipse"] = j.eclipse;
        joins.push_back(o);
    }
    char bits[9];
    std::snprintf(bits, sizeof bits, "%08x", s.chain.bits);
    return json{{"name", s.name},
                {"seed", s.seed},
                {"nodes", nodes},
                {"pulse", {{"delta_p", s.pulse.delta_p}, {"delta_r", s.pulse.delta_r}, {"k", s.pulse.k}}},
                {"decision_depth", s.decision_depth},
                {"chunk_limit", s.chunk_limit},
                {"chain_length", s.chain_length},
                {"block_interval", s.block_interval},
                {"workload",
                 {{"txs_per_block", s.workload.txs_per_block},
                  {"outputs_per_tx", s.workload.outputs_per_tx},
                  {"spend_ratio", s.workload.spend_ratio},
                  {"fee", s.workload.fee}}},
                {"latency", {{"min", s.latency.min}, {"max", s.latency.max}}},
                {"join_events", joins},
                {"max_retries", s.max_retries},
                {"storage_sample_every", s.storage_sample_every},
                {"max_extra_blocks", s.max_extra_blocks},
                {"magic", s.magic},
                {"subsidy", s.chain.subsidy},
                {"bits", bits}};
}

}  // namespace coinprune
