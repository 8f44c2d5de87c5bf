#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "kinesim/errors.hpp"
#include "kinesim/rng.hpp"
#include "kinesim/sim.hpp"
#include "kinesim/sizing.hpp"

// Run configuration: a block-structured key=value file aggregating the
// motion, drivetrain, powerpath, workload, radio, sim and sizing settings,
// plus override handling and a content fingerprint for report traceability.

namespace kinesim::config {

enum class KeyKind { number, integer, boolean, text };

struct KeySpec {
    std::string_view key;  // section.name
    KeyKind kind;
    std::string_view description;
};

inline const std::vector<KeySpec>& key_registry() {
    static const std::vector<KeySpec> registry = {
        {"motion.angle_mean_deg", KeyKind::number, "mean opening angle of a full actuation"},
        {"motion.angle_cv", KeyKind::number, "coefficient of variation of the opening angle"},
        {"motion.open_duration_mean_s", KeyKind::number, "mean opening duration"},
        {"motion.open_duration_cv", KeyKind::number, "cv of the opening duration"},
        {"motion.close_duration_mean_s", KeyKind::number, "mean closing duration"},
        {"motion.close_duration_cv", KeyKind::number, "cv of the closing duration"},
        {"motion.partial_probability", KeyKind::number, "chance an actuation is partial"},
        {"motion.partial_angle_min_deg", KeyKind::number, "lower bound of partial opening angles"},
        {"motion.partial_angle_max_deg", KeyKind::number, "upper bound of partial opening angles"},
        {"motion.inter_arrival_mean_s", KeyKind::number, "mean rest time between actuations"},
        {"motion.profile_shape", KeyKind::text, "angular velocity shape: half_sine or trapezoid"},
        {"motion.open_threshold_deg", KeyKind::number, "excursion detection threshold for replay"},
        {"drivetrain.stages", KeyKind::text, "gear stages hinge side first, e.g. 65:13,38:13,38:13"},
        {"drivetrain.ratio", KeyKind::number, "explicit speed ratio; 0 derives it from the stages"},
        {"drivetrain.ke_mv_per_rpm", KeyKind::number, "generator back-EMF constant"},
        {"drivetrain.r_internal_ohm", KeyKind::number, "generator source resistance"},
        {"drivetrain.rated_voltage_v", KeyKind::number, "generator rated voltage"},
        {"powerpath.capacitance_uf", KeyKind::number, "buffer capacitance in microfarads"},
        {"powerpath.cap_rating_v", KeyKind::number, "capacitor voltage rating"},
        {"powerpath.rectifier_drop_v", KeyKind::number, "total rectifier diode drop"},
        {"powerpath.converter_cutoff_v", KeyKind::number, "minimum converter input voltage"},
        {"powerpath.wake_threshold_v", KeyKind::number, "gate wake-up voltage"},
        {"powerpath.converter_efficiency", KeyKind::number, "converter efficiency for rail-side workloads"},
        {"powerpath.leakage_tau_s", KeyKind::number, "self-discharge time constant"},
        {"powerpath.coupling_efficiency", KeyKind::number, "drivetrain/electrical charging loss factor"},
        {"powerpath.integration_dt_s", KeyKind::number, "charging integration step"},
        {"workload.variant", KeyKind::text, "bin_sf10, door_sf6, cabinet_sf6 or cabinet_dual"},
        {"workload.phases", KeyKind::text, "non-radio phases as name:millijoules, comma separated"},
        {"workload.tx_energy_target_mj", KeyKind::number, "calibrate radio power from this packet energy"},
        {"workload.tx_power_mw", KeyKind::number, "explicit radio draw while transmitting"},
        {"radio.spreading_factor", KeyKind::integer, "LoRa spreading factor 6..12"},
        {"radio.bandwidth_hz", KeyKind::number, "LoRa bandwidth: 125000, 250000 or 500000"},
        {"radio.coding_rate", KeyKind::integer, "coding rate 1..4 meaning 4/5..4/8"},
        {"radio.preamble_symbols", KeyKind::integer, "preamble length in symbols"},
        {"radio.payload_bytes", KeyKind::integer, "payload size in bytes"},
        {"radio.explicit_header", KeyKind::boolean, "explicit PHY header (SF6 requires implicit)"},
        {"radio.crc", KeyKind::boolean, "append the payload CRC"},
        {"radio.low_data_rate_optimize", KeyKind::boolean, "low data rate optimization"},
        {"radio.tx_power_dbm", KeyKind::number, "configured RF output power"},
        {"sim.events", KeyKind::integer, "number of actuations to simulate"},
        {"sim.seed", KeyKind::integer, "root seed for all derived random streams"},
        {"sim.channel_loss_probability", KeyKind::number, "per-packet uplink loss probability"},
        {"sim.retrigger_probability", KeyKind::number, "chance of a rapid re-opening after a transaction"},
        {"sim.retrigger_window_s", KeyKind::number, "debounce window for the re-trigger"},
        {"sizing.transaction_energy_j", KeyKind::number, "workload energy the sizing must supply"},
        {"sizing.harvest_window_s", KeyKind::number, "harvesting window per actuation"},
        {"sizing.hinge_rpm_min", KeyKind::number, "lower hinge-speed envelope"},
        {"sizing.hinge_rpm_max", KeyKind::number, "upper hinge-speed envelope"},
        {"sizing.hinge_rpm_reference", KeyKind::number, "reference hinge speed for ratio selection"},
        {"sizing.anchor_rpm", KeyKind::number, "generator characterization anchor speed"},
        {"sizing.anchor_power_mw", KeyKind::number, "power into the anchor load at the anchor speed"},
        {"sizing.anchor_load_ohm", KeyKind::number, "characterization load resistance"},
        {"sizing.r_internal_ohm", KeyKind::number, "assumed generator source resistance"},
        {"sizing.load_reference_ohm", KeyKind::number, "average system load for power bookkeeping"},
        {"sizing.cap_rating_v", KeyKind::number, "capacitor rating available to the selection"},
        {"sizing.converter_cutoff_v", KeyKind::number, "converter cutoff for the selection"},
        {"sizing.headroom_fraction", KeyKind::number, "usable fraction of the capacitor rating"},
        {"sizing.margin_samples", KeyKind::integer, "Monte Carlo samples for the margin estimate"},
    };
    return registry;
}

inline const KeySpec* find_key(std::string_view key) {
    for (const auto& spec : key_registry())
        if (spec.key == key) return &spec;
    return nullptr;
}

// Resolves a possibly-bare override name: exact section.key, else a unique
// key name, else a unique key-name prefix.
inline std::string resolve_key(std::string_view name) {
    if (find_key(name)) return std::string(name);
    std::vector<std::string_view> matches;
    for (const auto& spec : key_registry()) {
        const auto dot = spec.key.find('.');
        const std::string_view bare = spec.key.substr(dot + 1);
        if (bare == name) matches.push_back(spec.key);
    }
    if (matches.empty()) {
        for (const auto& spec : key_registry()) {
            const auto dot = spec.key.find('.');
            if (spec.key.substr(dot + 1).starts_with(name)) matches.push_back(spec.key);
        }
    }
    if (matches.size() == 1) return std::string(matches.front());
    if (matches.empty()) throw ConfigError("unknown config key '" + std::string(name) + "'");
    std::string msg = "ambiguous config key '" + std::string(name) + "': matches";
    for (const auto& m : matches) msg += " " + std::string(m);
    throw ConfigError(msg);
}

struct ConfigDoc {
    std::map<std::string, std::string> values;  // section.key -> raw text

    bool has(std::string_view key) const { return values.count(std::string(key)) > 0; }
    bool has_section(std::string_view section) const {
        const std::string prefix = std::string(section) + ".";
        auto it = values.lower_bound(prefix);
        return it != values.end() && it->first.starts_with(prefix);
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline double parse_number(const std::string& key, const std::string& raw) {
    try {
        std::size_t used = 0;
        const double v = std::stod(raw, &used);
        if (used != raw.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::logic_error&) {
        throw ConfigError("key '" + key + "': expected a number, got '" + raw + "'");
    }
}

inline std::int64_t parse_integer(const std::string& key, const std::string& raw) {
    try {
        std::size_t used = 0;
        const std::int64_t v = std::stoll(raw, &used);
        if (used != raw.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::logic_error&) {
        throw ConfigError("key '" + key + "': expected an integer, got '" + raw + "'");
    }
}

inline bool parse_boolean(const std::string& key, const std::string& raw) {
    if (raw == "true" || raw == "1" || raw == "yes" || raw == "on") return true;
    if (raw == "false" || raw == "0" || raw == "no" || raw == "off") return false;
    throw ConfigError("key '" + key + "': expected a boolean, got '" + raw + "'");
}

} // namespace detail

inline ConfigDoc parse_config(std::string_view text) {
    ConfigDoc doc;
    std::string section;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        std::string_view line = (eol == std::string_view::npos) ? text.substr(pos)
                                                                : text.substr(pos, eol - pos);
        pos = (eol == std::string_view::npos) ? text.size() + 1 : eol + 1;
        ++line_no;
        line = detail::trim(line);
        if (line.empty() || line.front() == '#') continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(line_no) + ": unterminated section");
            section = std::string(detail::trim(line.substr(1, line.size() - 2)));
            if (section.empty())
                throw ConfigError("config line " + std::to_string(line_no) + ": empty section name");
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string name(detail::trim(line.substr(0, eq)));
        const std::string value(detail::trim(line.substr(eq + 1)));
        if (section.empty())
            throw ConfigError("config line " + std::to_string(line_no) + ": key outside any section");
        const std::string key = section + "." + name;
        if (!find_key(key))
            throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        doc.values[key] = value;
    }
    return doc;
}

inline ConfigDoc load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    try {
        return parse_config(buffer.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

// Overrides are `key=value` pairs; bare key names resolve against the
// registry when unambiguous.
inline void apply_override(ConfigDoc& doc, std::string_view assignment) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string_view::npos)
        throw ConfigError("override must look like key=value, got '" + std::string(assignment) + "'");
    const std::string key = resolve_key(detail::trim(assignment.substr(0, eq)));
    doc.values[key] = std::string(detail::trim(assignment.substr(eq + 1)));
}

// Content fingerprint over the canonical sorted key=value form; reports
// embed it so results stay traceable to their exact configuration.
inline std::string fingerprint(const ConfigDoc& doc) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&](std::string_view s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ull;
        }
    };
    for (const auto& [key, value] : doc.values) {  // std::map iterates sorted
        mix(key);
        mix("=");
        mix(value);
        mix("\n");
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// --- typed accessors -------------------------------------------------------

inline double get_number(const ConfigDoc& doc, std::string_view key, double fallback) {
    const auto it = doc.values.find(std::string(key));
    return it == doc.values.end() ? fallback : detail::parse_number(it->first, it->second);
}

inline std::int64_t get_integer(const ConfigDoc& doc, std::string_view key, std::int64_t fallback) {
    const auto it = doc.values.find(std::string(key));
    return it == doc.values.end() ? fallback : detail::parse_integer(it->first, it->second);
}

inline bool get_boolean(const ConfigDoc& doc, std::string_view key, bool fallback) {
    const auto it = doc.values.find(std::string(key));
    return it == doc.values.end() ? fallback : detail::parse_boolean(it->first, it->second);
}

inline std::string get_text(const ConfigDoc& doc, std::string_view key, std::string fallback) {
    const auto it = doc.values.find(std::string(key));
    return it == doc.values.end() ? std::move(fallback) : it->second;
}

// --- block builders ----------------------------------------------------------

inline motion::ActuationDistribution build_distribution(const ConfigDoc& doc) {
    motion::ActuationDistribution d;
    d.angle_mean_deg = get_number(doc, "motion.angle_mean_deg", d.angle_mean_deg);
    d.angle_cv = get_number(doc, "motion.angle_cv", d.angle_cv);
    d.open_duration_mean_s = get_number(doc, "motion.open_duration_mean_s", d.open_duration_mean_s);
    d.open_duration_cv = get_number(doc, "motion.open_duration_cv", d.open_duration_cv);
    d.close_duration_mean_s = get_number(doc, "motion.close_duration_mean_s", d.close_duration_mean_s);
    d.close_duration_cv = get_number(doc, "motion.close_duration_cv", d.close_duration_cv);
    d.partial_probability = get_number(doc, "motion.partial_probability", d.partial_probability);
    d.partial_angle_min_deg = get_number(doc, "motion.partial_angle_min_deg", d.partial_angle_min_deg);
    d.partial_angle_max_deg = get_number(doc, "motion.partial_angle_max_deg", d.partial_angle_max_deg);
    d.inter_arrival_mean_s = get_number(doc, "motion.inter_arrival_mean_s", d.inter_arrival_mean_s);
    if (d.angle_mean_deg <= 0.0 || d.open_duration_mean_s <= 0.0 || d.close_duration_mean_s <= 0.0)
        throw ConfigError("motion means must be positive");
    if (d.angle_cv < 0.0 || d.open_duration_cv < 0.0 || d.close_duration_cv < 0.0)
        throw ConfigError("motion cvs must be nonnegative");
    if (d.partial_probability < 0.0 || d.partial_probability > 1.0)
        throw ConfigError("partial_probability must be in [0, 1]");
    return d;
}

inline motion::ProfileShape build_profile_shape(const ConfigDoc& doc) {
    const std::string shape = get_text(doc, "motion.profile_shape", "half_sine");
    if (shape == "half_sine") return motion::ProfileShape::half_sine;
    if (shape == "trapezoid") return motion::ProfileShape::trapezoid;
    throw ConfigError("motion.profile_shape must be half_sine or trapezoid");
}

inline drivetrain::GearTrain parse_stages(const std::string& text) {
    drivetrain::GearTrain train;
    std::stringstream ss(text);
    std::string stage;
    while (std::getline(ss, stage, ',')) {
        const std::size_t colon = stage.find(':');
        if (colon == std::string::npos)
            throw ConfigError("drivetrain.stages: expected input:output pairs, got '" + stage + "'");
        try {
            train.stages.push_back({std::stoi(stage.substr(0, colon)),
                                    std::stoi(stage.substr(colon + 1))});
        } catch (const std::logic_error&) {
            throw ConfigError("drivetrain.stages: bad tooth count in '" + stage + "'");
        }
    }
    return train;
}

inline double build_gear_ratio(const ConfigDoc& doc) {
    const double explicit_ratio = get_number(doc, "drivetrain.ratio", 0.0);
    if (explicit_ratio > 0.0) return explicit_ratio;
    return drivetrain::train_ratio(parse_stages(get_text(doc, "drivetrain.stages", "65:13,38:13,38:13")));
}

inline drivetrain::GeneratorModel build_generator(const ConfigDoc& doc) {
    drivetrain::GeneratorModel gen;
    gen.ke_v_per_rpm = 1e-3 * get_number(doc, "drivetrain.ke_mv_per_rpm", 12.0);
    gen.r_internal_ohm = get_number(doc, "drivetrain.r_internal_ohm", 10.0);
    gen.rated_voltage_v = get_number(doc, "drivetrain.rated_voltage_v", 24.0);
    return gen;
}

inline powerpath::PowerPathConfig build_powerpath(const ConfigDoc& doc) {
    powerpath::PowerPathConfig p;
    p.capacitance_f = 1e-6 * get_number(doc, "powerpath.capacitance_uf", 1000.0);
    p.cap_rating_v = get_number(doc, "powerpath.cap_rating_v", p.cap_rating_v);
    p.rectifier_drop_v = get_number(doc, "powerpath.rectifier_drop_v", p.rectifier_drop_v);
    p.converter_cutoff_v = get_number(doc, "powerpath.converter_cutoff_v", p.converter_cutoff_v);
    p.wake_threshold_v = get_number(doc, "powerpath.wake_threshold_v", p.wake_threshold_v);
    p.converter_efficiency = get_number(doc, "powerpath.converter_efficiency", p.converter_efficiency);
    p.leakage_tau_s = get_number(doc, "powerpath.leakage_tau_s", p.leakage_tau_s);
    p.coupling_efficiency = get_number(doc, "powerpath.coupling_efficiency", p.coupling_efficiency);
    powerpath::validate(p);
    return p;
}

inline transaction::Variant parse_variant(const std::string& name) {
    if (name == "bin_sf10") return transaction::Variant::bin_sf10;
    if (name == "door_sf6") return transaction::Variant::door_sf6;
    if (name == "cabinet_sf6") return transaction::Variant::cabinet_sf6;
    if (name == "cabinet_dual") return transaction::Variant::cabinet_dual;
    throw ConfigError("unknown workload.variant '" + name + "'");
}

inline std::vector<transaction::Phase> parse_phases(const std::string& text) {
    std::vector<transaction::Phase> phases;
    if (detail::trim(text).empty()) return phases;
    std::stringstream ss(text);
    std::string entry;
    while (std::getline(ss, entry, ',')) {
        const std::size_t colon = entry.find(':');
        if (colon == std::string::npos)
            throw ConfigError("workload.phases: expected name:millijoules, got '" + entry + "'");
        transaction::Phase p;
        p.name = std::string(detail::trim(entry.substr(0, colon)));
        p.energy_j = 1e-3 * detail::parse_number("workload.phases", std::string(detail::trim(entry.substr(colon + 1))));
        phases.push_back(std::move(p));
    }
    return phases;
}

inline transaction::LoRaConfig build_radio(const ConfigDoc& doc) {
    transaction::LoRaConfig r;
    r.spreading_factor = int(get_integer(doc, "radio.spreading_factor", r.spreading_factor));
    r.bandwidth_hz = get_number(doc, "radio.bandwidth_hz", r.bandwidth_hz);
    r.coding_rate = int(get_integer(doc, "radio.coding_rate", r.coding_rate));
    r.preamble_symbols = int(get_integer(doc, "radio.preamble_symbols", r.preamble_symbols));
    r.payload_bytes = int(get_integer(doc, "radio.payload_bytes", r.payload_bytes));
    r.explicit_header = get_boolean(doc, "radio.explicit_header", r.explicit_header);
    r.crc_on = get_boolean(doc, "radio.crc", r.crc_on);
    r.low_data_rate_optimize = get_boolean(doc, "radio.low_data_rate_optimize", r.low_data_rate_optimize);
    r.tx_power_dbm = get_number(doc, "radio.tx_power_dbm", r.tx_power_dbm);
    transaction::validate(r);
    return r;
}

inline std::pair<transaction::WorkloadSpec, transaction::RadioEnergyModel>
build_workload(const ConfigDoc& doc) {
    transaction::WorkloadSpec spec;
    spec.variant = parse_variant(get_text(doc, "workload.variant", "bin_sf10"));
    spec.phases = parse_phases(get_text(doc, "workload.phases", "boot:0.45,sense:3.0"));
    spec.radio = build_radio(doc);
    transaction::validate(spec);

    const double target_mj = get_number(doc, "workload.tx_energy_target_mj", 0.0);
    const double power_mw = get_number(doc, "workload.tx_power_mw", 0.0);
    if ((target_mj > 0.0) == (power_mw > 0.0))
        throw ConfigError("workload needs exactly one of tx_energy_target_mj or tx_power_mw");
    transaction::RadioEnergyModel radio;
    if (target_mj > 0.0) radio = transaction::calibrate_radio(1e-3 * target_mj, spec.radio);
    else radio.effective_tx_power_w = 1e-3 * power_mw;
    return {spec, radio};
}

inline sim::DeploymentConfig build_deployment(const ConfigDoc& doc, const std::string& label) {
    for (std::string_view section : {"motion", "powerpath", "workload", "sim"})
        if (!doc.has_section(section))
            throw ConfigError("config missing [" + std::string(section) + "] block");
    sim::DeploymentConfig cfg;
    cfg.distribution = build_distribution(doc);
    cfg.profile_shape = build_profile_shape(doc);
    cfg.event_count = std::size_t(get_integer(doc, "sim.events", 1000));
    auto [workload, radio] = build_workload(doc);
    cfg.workload = std::move(workload);
    cfg.radio = radio;
    cfg.power = build_powerpath(doc);
    cfg.gear_ratio = build_gear_ratio(doc);
    cfg.power.coupling_efficiency = get_number(doc, "powerpath.coupling_efficiency", 0.85);
    cfg.integration_dt_s = get_number(doc, "powerpath.integration_dt_s", 1e-3);
    cfg.generator = build_generator(doc);
    cfg.channel_loss_probability = get_number(doc, "sim.channel_loss_probability", 0.0);
    cfg.retrigger_probability = get_number(doc, "sim.retrigger_probability", 0.0);
    cfg.retrigger_window_s = get_number(doc, "sim.retrigger_window_s", 2.0);
    cfg.seed = std::uint64_t(get_integer(doc, "sim.seed", 0));
    cfg.label = label;
    cfg.fingerprint = fingerprint(doc);
    sim::validate(cfg);
    return cfg;
}

struct SizingRun {
    sizing::SizingSpec spec;
    std::size_t margin_samples = 2000;
};

inline SizingRun build_sizing(const ConfigDoc& doc) {
    if (!doc.has_section("sizing")) throw ConfigError("config missing [sizing] block");
    SizingRun run;
    sizing::SizingSpec& s = run.spec;
    s.transaction_energy_j = get_number(doc, "sizing.transaction_energy_j", s.transaction_energy_j);
    s.harvest_window_s = get_number(doc, "sizing.harvest_window_s", s.harvest_window_s);
    s.hinge_rpm_min = get_number(doc, "sizing.hinge_rpm_min", s.hinge_rpm_min);
    s.hinge_rpm_max = get_number(doc, "sizing.hinge_rpm_max", s.hinge_rpm_max);
    s.hinge_rpm_reference = get_number(doc, "sizing.hinge_rpm_reference", s.hinge_rpm_reference);
    s.load_reference_ohm = get_number(doc, "sizing.load_reference_ohm", s.load_reference_ohm);
    s.cap_rating_v = get_number(doc, "sizing.cap_rating_v", s.cap_rating_v);
    s.converter_cutoff_v = get_number(doc, "sizing.converter_cutoff_v", s.converter_cutoff_v);
    s.headroom_fraction = get_number(doc, "sizing.headroom_fraction", s.headroom_fraction);
    const drivetrain::PowerAnchor anchor{get_number(doc, "sizing.anchor_rpm", 1100.0),
                                         1e-3 * get_number(doc, "sizing.anchor_power_mw", 51.0),
                                         get_number(doc, "sizing.anchor_load_ohm", 470.0)};
    s.generator = drivetrain::fit_generator({anchor},
                                            get_number(doc, "sizing.r_internal_ohm", 10.0), 24.0);
    sizing::validate(s);
    run.margin_samples = std::size_t(get_integer(doc, "sizing.margin_samples", 2000));
    return run;
}

} // namespace kinesim::config
