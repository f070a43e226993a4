#include "cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>

#include "coinprune/log.hpp"
#include "coinprune/reaffirm.hpp"
#include "coinprune/simnet.hpp"
#include "coinprune/snapshot.hpp"

namespace coinprune::cli {

namespace {

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

Bytes read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path);
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const Bytes& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) throw InputError("cannot write " + path);
}

Hash256 parse_id(const std::string& text, const char* what) {
    auto h = Hash256::from_hex(text);
    if (!h) throw InputError(std::string(what) + " must be 64 lowercase hex characters");
    return *h;
}

int cmd_run(const std::string& scenario_path, std::optional<std::uint64_t> seed, const std::string& out_dir,
            std::ostream& out) {
    Scenario s;
    try {
        s = load_scenario(scenario_path);
    } catch (const std::exception& e) {
        throw InputError(e.what());
    }
    if (seed) s.seed = *seed;
    const Metrics m = run(s);
    write_metrics(m, out_dir);
    out << "tip " << m.tip_height << ' ' << m.tip_id.hex() << '\n';
    return kOk;
}

int cmd_make(const std::string& utxo_path, std::uint32_t height, const std::string& block_hex,
             const std::string& out_path, std::size_t chunk_limit, std::ostream& out) {
    const Hash256 block = parse_id(block_hex, "--block-id");
    UtxoSet utxo;
    try {
        utxo = parse_utxo_stream(read_file(utxo_path));
    } catch (const DecodeError& e) {
        throw InputError(std::string("malformed UTXO stream: ") + e.what());
    }
    Snapshot snap;
    try {
        snap = create_snapshot(utxo, height, block, chunk_limit);
    } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
    }
    write_file(out_path, write_snapshot_file(snap));
    out << snapshot_id(snap).hex() << '\n';
    return kOk;
}

int cmd_verify(const std::string& in_path, const std::string& expect_hex, std::ostream& out, std::ostream& err) {
    const SnapshotId expected{parse_id(expect_hex, "--expect-id")};
    const Bytes file = read_file(in_path);
    Snapshot snap;
    try {
        snap = read_snapshot_file(file);
    } catch (const DecodeError& e) {
        throw InputError(std::string("malformed snapshot file: ") + e.what());
    }
    try {
        verify_and_apply(snap, expected);
    } catch (const SnapshotError& e) {
        if (e.kind() == SnapshotError::Kind::Malformed) throw InputError(e.what());
        err << "verification failed: " << e.what() << '\n';
        out << "MISMATCH " << snapshot_id(snap).hex() << '\n';
        return kVerifyFailed;
    }
    out << "OK " << expected.hex() << '\n';
    return kOk;
}

int cmd_inspect(const std::string& hex, std::ostream& out) {
    auto bytes = parse_hex(hex);
    if (!bytes) throw InputError("--hex is not valid hex");
    const auto id = parse_marker(*bytes);
    out << (id ? id->hex() : std::string("none")) << '\n';
    return kOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"CoinPrune simulator and snapshot tool", "coinprune"};
    app.require_subcommand(1, 1);

    std::string scenario_path, out_dir;
    std::optional<std::uint64_t> seed;
    auto* run_cmd = app.add_subcommand("run", "Run a scenario and write metrics");
    run_cmd->add_option("--scenario", scenario_path, "Scenario JSON")->required();
    run_cmd->add_option("--seed", seed, "Override the scenario seed");
    run_cmd->add_option("--out", out_dir, "Output directory")->required();

    std::string utxo_path, block_hex, snap_out;
    std::uint32_t height = 0;
    std::size_t chunk_limit = kDefaultChunkLimit;
    auto* make_cmd = app.add_subcommand("make-snapshot", "Build a .cpsnap from a UTXO entry stream");
    make_cmd->add_option("--utxo", utxo_path, "UTXO entry stream")->required();
    make_cmd->add_option("--height", height, "Snapshot height")->required();
    make_cmd->add_option("--block-id", block_hex, "Block id at that height")->required();
    make_cmd->add_option("--out", snap_out, "Output .cpsnap")->required();
    make_cmd->add_option("--chunk-limit", chunk_limit, "Maximum chunk payload")->check(CLI::PositiveNumber);

    std::string in_path, expect_hex;
    auto* verify_cmd = app.add_subcommand("verify-snapshot", "Check a .cpsnap against an id");
    verify_cmd->add_option("--in", in_path, "Snapshot file")->required();
    verify_cmd->add_option("--expect-id", expect_hex, "Expected id")->required();

    std::string marker_hex;
    auto* inspect_cmd = app.add_subcommand("inspect-marker", "Extract a reaffirmation marker");
    inspect_cmd->add_option("--hex", marker_hex, "Coinbase data as hex")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "coinprune: " << e.what() << '\n';
        return kUsage;
    }

    try {
        if (*run_cmd) return cmd_run(scenario_path, seed, out_dir, out);
        if (*make_cmd) return cmd_make(utxo_path, height, block_hex, snap_out, chunk_limit, out);
        if (*verify_cmd) return cmd_verify(in_path, expect_hex, out, err);
        return cmd_inspect(marker_hex, out);
    } catch (const InputError& e) {
        err << "coinprune: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        err << "coinprune: " << e.what() << '\n';
        return kUsage;
    }
}

}  // namespace coinprune::cli
