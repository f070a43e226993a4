#include "coinprune/metrics.hpp"

#include <fstream>
#include <sstream>

namespace coinprune {

using nlohmann::json;

namespace {

json storage_json(const StorageReport& r) {
    return json{{"bytes_bodies", r.bytes_bodies},
                {"bytes_metas", r.bytes_metas},
                {"bytes_snapshot", r.bytes_snapshot},
                {"bytes_utxo", r.bytes_utxo}};
}

json opt(const std::optional<std::uint64_t>& v) { return v ? json(*v) : json(nullptr); }

json accepted_json(const std::vector<AcceptedRecord>& recs) {
    json a = json::array();
    for (const auto& r : recs) a.push_back({{"pulse_height", r.pulse_height}, {"id", r.id.hex()}});
    return a;
}

void line(std::ostringstream& out, const json& j) { out << j.dump() << '\n'; }

}  // namespace

std::string to_ndjson(const Metrics& m) {
    std::ostringstream out;
    line(out, {{"record", "run"}, {"scenario", m.scenario}});
    for (const auto& s : m.samples) {
        auto j = storage_json(s.report);
        j["record"] = "storage";
        j["time"] = s.time;
        j["node_id"] = s.node;
        j["height"] = s.height;
        line(out, j);
    }
    for (const auto& p : m.pulses) {
        line(out, {{"record", "pulse"},
                   {"pulse_height", p.pulse_height},
                   {"outcome", to_string(p.outcome.kind)},
                   {"id", p.outcome.id ? json(p.outcome.id->hex()) : json(nullptr)},
                   {"honest_id", p.honest_id.hex()},
                   {"honest_markers", p.honest_markers},
                   {"other_markers", p.other_markers}});
    }
    for (const auto& n : m.nodes) {
        line(out, {{"record", "node"},
                   {"node_id", n.id},
                   {"role", n.role},
                   {"final_role", n.final_role},
                   {"honest", n.honest},
                   {"misbehavior", n.misbehavior},
                   {"mining_power", n.mining_power},
                   {"tip_height", n.tip_height},
                   {"tip_id", n.tip_id.hex()},
                   {"storage", storage_json(n.storage)},
                   {"traffic_in", n.traffic.bytes_in},
                   {"traffic_out", n.traffic.bytes_out},
                   {"received_by_command", n.traffic.received},
                   {"sent_by_command", n.traffic.sent},
                   {"accepted", accepted_json(n.accepted)},
                   {"failure", n.failure ? json(*n.failure) : json(nullptr)},
                   {"utxo_matches_oracle", n.utxo_matches_oracle},
                   {"rejected_blocks", n.rejected_blocks}});
        if (n.join) {
            const auto& j = *n.join;
            line(out, {{"record", "join"},
                       {"node_id", n.id},
                       {"role", n.role},
                       {"join_time", j.join_time},
                       {"done_time", opt(j.done_time)},
                       {"outcome", j.outcome},
                       {"retries", j.retries},
                       {"events_to_accept", opt(j.events_to_accept)},
                       {"snapshot_height", j.snapshot ? json(j.snapshot->pulse_height) : json(nullptr)},
                       {"snapshot_id", j.snapshot ? json(j.snapshot->id.hex()) : json(nullptr)},
                       {"last_abort", j.last_abort},
                       {"eclipsed", j.eclipsed}});
        }
    }
    line(out, {{"record", "summary"},
               {"scenario", m.name},
               {"seed", m.seed},
               {"tip_height", m.tip_height},
               {"tip_id", m.tip_id.hex()},
               {"converged", m.converged},
               {"blocks_mined", m.blocks_mined},
               {"extra_blocks", m.extra_blocks},
               {"rejected_blocks", m.rejected_blocks},
               {"invalid_acceptances", m.invalid_acceptances},
               {"bytes_sent", m.bytes_sent},
               {"bytes_received", m.bytes_received},
               {"chain_body_bytes", m.chain_body_bytes},
               {"events", m.events}});
    return out.str();
}

std::string to_summary_csv(const Metrics& m) {
    std::ostringstream out;
    out << "node_id,role,bytes_bodies,bytes_metas,bytes_snapshot,traffic_in,traffic_out,join_outcome,events_to_accept\n";
    for (const auto& n : m.nodes) {
        out << n.id << ',' << n.role << ',' << n.storage.bytes_bodies << ',' << n.storage.bytes_metas << ','
            << n.storage.bytes_snapshot << ',' << n.traffic.bytes_in << ',' << n.traffic.bytes_out << ',';
        if (n.join) {
            out << n.join->outcome << ',';
            if (n.join->events_to_accept) out << *n.join->events_to_accept;
            else out << '-';
        } else {
            out << "-,-";
        }
        out << '\n';
    }
    return out.str();
}

void write_metrics(const Metrics& m, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto put = [&](const char* name, const std::string& body) {
        std::ofstream f(dir / name, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
        f << body;
        if (!f) throw std::runtime_error("short write on " + (dir / name).string());
    };
    put("metrics.ndjson", to_ndjson(m));
    put("summary.csv", to_summary_csv(m));
}

}  // namespace coinprune
