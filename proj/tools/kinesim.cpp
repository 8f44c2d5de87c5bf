// kinesim: sizing, simulation, trace replay, airtime and sweep tooling for
// motion-powered sensing nodes.
//
// Exit codes: 0 success, 2 usage/validation, 3 infeasible design,
// 4 I/O failure, 5 trace parse/segmentation failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kinesim/config.hpp"
#include "kinesim/report.hpp"
#include "kinesim/sim.hpp"
#include "kinesim/sizing.hpp"

namespace {

using namespace kinesim;

constexpr int kExitUsage = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitIo = 4;
constexpr int kExitTrace = 5;

std::string override_help() {
    std::ostringstream out;
    out << "Config keys accepted by --override (also sweepable when numeric):\n";
    for (const auto& spec : config::key_registry()) {
        out << "  " << spec.key;
        for (std::size_t i = spec.key.size(); i < 36; ++i) out << ' ';
        out << spec.description << '\n';
    }
    return out.str();
}

std::string stem_of(const std::string& path) {
    return std::filesystem::path(path).stem().string();
}

std::optional<std::uint64_t> env_seed() {
    if (const char* raw = std::getenv("KINESIM_SEED")) {
        try {
            return std::stoull(raw);
        } catch (const std::logic_error&) {
            throw ConfigError("KINESIM_SEED must be an unsigned integer");
        }
    }
    return std::nullopt;
}

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> events;
    std::string label;
};

config::ConfigDoc load_with_overrides(const CommonArgs& args) {
    auto doc = config::load_config(args.config_path);
    for (const auto& assignment : args.overrides) config::apply_override(doc, assignment);
    if (args.events) config::apply_override(doc, "sim.events=" + std::to_string(*args.events));
    if (args.seed) {
        config::apply_override(doc, "sim.seed=" + std::to_string(*args.seed));
    } else if (!doc.has("sim.seed")) {
        if (const auto fallback = env_seed())
            config::apply_override(doc, "sim.seed=" + std::to_string(*fallback));
    }
    return doc;
}

void write_deployment_reports(const sim::DeploymentReport& report, const std::string& json_path,
                              const std::string& csv_path, bool per_event) {
    report::write_file(json_path, report::to_json(report, per_event).dump(2) + "\n");
    report::write_file(csv_path, report::summary_csv(sim::summarize(report)));
}

void print_simulation_summary(const sim::DeploymentReport& report) {
    std::ostringstream line;
    line << "events=" << report.event_count << " delivered=" << report.delivered_events
         << " success=" << std::fixed << std::setprecision(1) << 100.0 * report.success_rate
         << "%";
    std::cout << line.str() << '\n';
}

int cmd_size(const CommonArgs& args, const std::string& json_path) {
    const auto doc = load_with_overrides(args);
    const auto run = config::build_sizing(doc);
    sizing::SizingResult result;
    if (doc.has_section("motion") && run.margin_samples > 0) {
        const auto dist = config::build_distribution(doc);
        const auto seed = std::uint64_t(config::get_integer(doc, "sim.seed", 0));
        result = sizing::size_system(run.spec, dist, run.margin_samples, seed);
    } else {
        result = sizing::size_system(run.spec);
    }
    auto j = report::to_json(result);
    j["config_fingerprint"] = config::fingerprint(doc);
    report::write_file(json_path, j.dump(2) + "\n");
    std::cout << "sizing (" << stem_of(args.config_path) << ")\n"
              << report::sizing_table(result) << "wrote " << json_path << '\n';
    return 0;
}

int cmd_simulate(const CommonArgs& args, const std::string& json_path,
                 const std::string& csv_path, bool per_event) {
    const auto doc = load_with_overrides(args);
    const auto label = args.label.empty() ? stem_of(args.config_path) : args.label;
    const auto cfg = config::build_deployment(doc, label);
    const auto report = sim::simulate_deployment(cfg);
    write_deployment_reports(report, json_path, csv_path, per_event);
    print_simulation_summary(report);
    return 0;
}

int cmd_replay(const CommonArgs& args, const std::string& trace_path,
               const std::string& json_path, const std::string& csv_path, bool per_event) {
    const auto doc = load_with_overrides(args);
    const auto label = args.label.empty() ? stem_of(trace_path) : args.label;
    const auto cfg = config::build_deployment(doc, label);

    std::ifstream in(trace_path, std::ios::binary);
    if (!in) throw IoError("cannot open trace file '" + trace_path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    const auto records = motion::parse_trace(buffer.str());
    const double threshold = config::get_number(doc, "motion.open_threshold_deg", 5.0);
    const auto report = sim::replay_trace(records, cfg, threshold);
    write_deployment_reports(report, json_path, csv_path, per_event);
    print_simulation_summary(report);
    return 0;
}

struct ToaArgs {
    transaction::LoRaConfig radio;
    bool implicit = false;
    double tx_power_mw = 0.0;
    double target_mj = 0.0;
};

int cmd_toa(ToaArgs& args) {
    args.radio.explicit_header = !args.implicit;
    const double toa = transaction::time_on_air_s(args.radio);
    std::ostringstream out;
    out << std::fixed << std::setprecision(3) << "toa_ms=" << 1e3 * toa;
    if (args.target_mj > 0.0) {
        const auto radio = transaction::calibrate_radio(1e-3 * args.target_mj, args.radio);
        out << " tx_energy_mJ=" << 1e3 * transaction::tx_energy_j(args.radio, radio)
            << " tx_power_mW=" << 1e3 * radio.effective_tx_power_w;
    } else if (args.tx_power_mw > 0.0) {
        const transaction::RadioEnergyModel radio{1e-3 * args.tx_power_mw};
        out << " tx_energy_mJ=" << 1e3 * transaction::tx_energy_j(args.radio, radio);
    }
    std::cout << out.str() << '\n';
    return 0;
}

int cmd_sweep(const CommonArgs& args, const std::string& param, double from, double to,
              int steps, const std::string& out_path, bool parallel) {
    if (steps < 1) throw ConfigError("--steps must be at least 1");
    const std::string key = config::resolve_key(param);
    const auto* spec = config::find_key(key);
    if (spec->kind != config::KeyKind::number && spec->kind != config::KeyKind::integer) {
        std::ostringstream msg;
        msg << "'" << key << "' is not numeric; sweepable keys:";
        for (const auto& k : config::key_registry())
            if (k.kind == config::KeyKind::number || k.kind == config::KeyKind::integer)
                msg << ' ' << k.key;
        throw ConfigError(msg.str());
    }
    const auto base = load_with_overrides(args);

    std::vector<double> values;
    values.reserve(std::size_t(steps));
    for (int i = 0; i < steps; ++i)
        values.push_back(steps == 1 ? from
                                    : from + (to - from) * double(i) / double(steps - 1));

    // every point runs the full simulation under common random numbers
    auto run_point = [&](double value) {
        auto doc = base;
        std::ostringstream assign;
        assign << key << '=' << std::setprecision(17) << value;
        config::apply_override(doc, assign.str());
        const auto cfg = config::build_deployment(doc, stem_of(args.config_path));
        return sim::simulate_deployment(cfg);
    };

    std::vector<sim::DeploymentReport> reports(values.size());
    if (parallel) {
        std::vector<std::future<sim::DeploymentReport>> futures;
        futures.reserve(values.size());
        for (double v : values) futures.push_back(std::async(std::launch::async, run_point, v));
        for (std::size_t i = 0; i < futures.size(); ++i) reports[i] = futures[i].get();
    } else {
        for (std::size_t i = 0; i < values.size(); ++i) reports[i] = run_point(values[i]);
    }

    std::ostringstream csv;
    csv << "value,success_rate,single_packet,double_packet,no_charge,channel_loss\n";
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto& r = reports[i];
        csv << std::setprecision(10) << values[i] << ',' << std::setprecision(6)
            << r.success_rate << ',' << r.counts.single_packet << ',' << r.counts.double_packet
            << ',' << r.counts.no_charge << ',' << r.counts.channel_loss << '\n';
    }
    report::write_file(out_path, csv.str());
    std::cout << "swept " << key << " over " << steps << " points -> " << out_path << '\n';
    return 0;
}

// Reports the smallest coupling efficiency at which the nominal actuation,
// starting from the given residual, still crosses the wake threshold.
int cmd_calibrate(const CommonArgs& args, double start_v) {
    const auto doc = load_with_overrides(args);
    auto cfg = config::build_deployment(doc, stem_of(args.config_path));
    const motion::ActuationEvent nominal{cfg.distribution.angle_mean_deg,
                                         cfg.distribution.open_duration_mean_s,
                                         cfg.distribution.close_duration_mean_s, 0.0, false};

    auto peak_with = [&](double eta) {
        auto probe = cfg;
        probe.power.coupling_efficiency = eta;
        probe.channel_loss_probability = 0.0;
        probe.retrigger_probability = 0.0;
        RngEngine rng(0);
        return sim::simulate_event({start_v, 0.0}, nominal, probe, rng).peak_voltage_v;
    };

    const double target = cfg.power.wake_threshold_v;
    const double best = peak_with(1.0);
    std::cout << std::fixed << std::setprecision(3);
    std::cout << "nominal actuation from " << start_v << " V\n";
    std::cout << "  peak at coupling 1.00: " << best << " V (threshold " << target << " V)\n";
    std::cout << "  peak at configured " << std::setprecision(2) << cfg.power.coupling_efficiency
              << ": " << std::setprecision(3) << peak_with(cfg.power.coupling_efficiency)
              << " V\n";
    if (best < target) {
        std::cout << "  threshold unreachable at unity coupling\n";
        return kExitInfeasible;
    }
    double lo = 0.01, hi = 1.0;
    for (int i = 0; i < 40; ++i) {
        const double mid = 0.5 * (lo + hi);
        (peak_with(mid) >= target ? hi : lo) = mid;
    }
    std::cout << "  minimum coupling efficiency: " << std::setprecision(3) << hi << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"kinesim: simulator and sizing toolkit for motion-powered sensing nodes"};
    app.require_subcommand(1);
    app.footer(override_help());

    CommonArgs common;
    ToaArgs toa;
    std::string json_path = "report.json";
    std::string csv_path = "report.csv";
    std::string sizing_json = "sizing.json";
    std::string sweep_out = "sweep.csv";
    std::string trace_path;
    std::string sweep_param;
    double sweep_from = 0.0, sweep_to = 0.0;
    int sweep_steps = 1;
    bool per_event = false;
    bool parallel = false;
    double calibrate_start_v = 3.0;

    auto add_common = [&](CLI::App* cmd, bool with_events) {
        cmd->add_option("config", common.config_path, "run configuration file")->required();
        cmd->add_option("--override", common.overrides,
                        "set a config key, e.g. --override wake_threshold_v=12");
        cmd->add_option("--seed", common.seed,
                        "root seed (falls back to config, then KINESIM_SEED)");
        if (with_events) cmd->add_option("--events", common.events, "number of actuations");
        cmd->add_option("--label", common.label, "row label for reports");
    };

    auto* size = app.add_subcommand("size", "solve the inverse design for a workload");
    add_common(size, false);
    size->add_option("--json", sizing_json, "sizing result path");

    auto* simulate = app.add_subcommand("simulate", "run a seeded deployment simulation");
    add_common(simulate, true);
    simulate->add_option("--json", json_path, "report JSON path");
    simulate->add_option("--csv", csv_path, "summary CSV path");
    simulate->add_flag("--per-event", per_event, "embed per-event records in the JSON report");

    auto* replay = app.add_subcommand("replay", "run a recorded encoder trace through the model");
    add_common(replay, false);
    replay->add_option("trace", trace_path, "encoder trace CSV")->required();
    replay->add_option("--json", json_path, "report JSON path");
    replay->add_option("--csv", csv_path, "summary CSV path");
    replay->add_flag("--per-event", per_event, "embed per-event records in the JSON report");

    auto* airtime = app.add_subcommand("toa", "LoRa time-on-air and packet energy");
    airtime->add_option("--sf", toa.radio.spreading_factor, "spreading factor 6..12");
    airtime->add_option("--bw", toa.radio.bandwidth_hz, "bandwidth in Hz");
    airtime->add_option("--cr", toa.radio.coding_rate, "coding rate 1..4 (4/5..4/8)");
    airtime->add_option("--pl", toa.radio.payload_bytes, "payload bytes");
    airtime->add_option("--preamble", toa.radio.preamble_symbols, "preamble symbols");
    airtime->add_flag("--crc,!--no-crc", toa.radio.crc_on, "payload CRC");
    airtime->add_flag("--implicit,!--explicit", toa.implicit, "header mode");
    airtime->add_flag("--ldro", toa.radio.low_data_rate_optimize, "low data rate optimization");
    airtime->add_option("--tx-power-mw", toa.tx_power_mw, "radio draw for the energy line");
    airtime->add_option("--target-mj", toa.target_mj, "calibrate the draw from a packet energy");

    auto* sweep = app.add_subcommand("sweep", "simulate across one numeric config key");
    add_common(sweep, true);
    sweep->add_option("--param", sweep_param, "config key to sweep")->required();
    sweep->add_option("--from", sweep_from, "first value")->required();
    sweep->add_option("--to", sweep_to, "last value")->required();
    sweep->add_option("--steps", sweep_steps, "number of points")->required();
    sweep->add_option("--out", sweep_out, "sweep CSV path");
    sweep->add_flag("--parallel", parallel, "run sweep points concurrently");

    auto* calibrate = app.add_subcommand("calibrate", "check the charging margin of a config");
    add_common(calibrate, false);
    calibrate->add_option("--start-v", calibrate_start_v, "buffer voltage before the actuation");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (size->parsed()) return cmd_size(common, sizing_json);
        if (simulate->parsed()) return cmd_simulate(common, json_path, csv_path, per_event);
        if (replay->parsed())
            return cmd_replay(common, trace_path, json_path, csv_path, per_event);
        if (airtime->parsed()) return cmd_toa(toa);
        if (sweep->parsed())
            return cmd_sweep(common, sweep_param, sweep_from, sweep_to, sweep_steps, sweep_out,
                             parallel);
        if (calibrate->parsed()) return cmd_calibrate(common, calibrate_start_v);
    } catch (const TraceFormatError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitTrace;
    } catch (const TraceOrderError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitTrace;
    } catch (const InsufficientDataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitTrace;
    } catch (const InfeasibleError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInfeasible;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return 0;
}
