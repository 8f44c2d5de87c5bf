#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "kinesim/errors.hpp"
#include "kinesim/rng.hpp"

// Wake-sense-transmit workload: per-phase energies, LoRa airtime and
// transmit energy, and the ultrasonic fill-level model.

namespace kinesim::transaction {

struct LoRaConfig {
    int spreading_factor = 10;   // 6..12
    double bandwidth_hz = 125000;
    int coding_rate = 4;         // 1..4, meaning 4/5..4/8
    int preamble_symbols = 8;
    int payload_bytes = 8;
    bool explicit_header = true;
    bool crc_on = true;
    bool low_data_rate_optimize = false;
    double tx_power_dbm = 20.0;
};

enum class Variant { bin_sf10, door_sf6, cabinet_sf6, cabinet_dual };

struct Phase {
    std::string name;
    double energy_j = 0.0;
};

struct WorkloadSpec {
    std::vector<Phase> phases;
    LoRaConfig radio;
    Variant variant = Variant::bin_sf10;
};

// Total electrical draw of the radio chain while transmitting.
struct RadioEnergyModel {
    double effective_tx_power_w = 0.0;
};

struct SensorModel {
    double usable_depth_mm = 500.0;
    double abs_error_mean_mm = 19.08;
    double abs_error_sd_mm = 15.9;
};

enum class FillCategory { empty, quarter, half, three_quarter, full };

inline void validate(const LoRaConfig& cfg) {
    if (cfg.spreading_factor < 6 || cfg.spreading_factor > 12)
        throw ConfigError("spreading factor must be 6..12");
    if (cfg.spreading_factor == 6 && cfg.explicit_header)
        throw ConfigError("SF6 requires an implicit header");
    if (cfg.bandwidth_hz != 125000.0 && cfg.bandwidth_hz != 250000.0 && cfg.bandwidth_hz != 500000.0)
        throw ConfigError("bandwidth must be 125, 250 or 500 kHz");
    if (cfg.coding_rate < 1 || cfg.coding_rate > 4)
        throw ConfigError("coding rate must be 1..4");
    if (cfg.preamble_symbols < 1) throw ConfigError("preamble needs at least one symbol");
    if (cfg.payload_bytes < 0) throw ConfigError("payload size must be nonnegative");
}

inline void validate(const WorkloadSpec& spec) {
    validate(spec.radio);
    for (const auto& p : spec.phases)
        if (p.energy_j < 0.0) throw ConfigError("phase energy must be nonnegative: " + p.name);
    if (spec.variant == Variant::bin_sf10) {
        const bool has_sense = std::any_of(spec.phases.begin(), spec.phases.end(), [](const Phase& p) {
            return p.name.find("sens") != std::string::npos;
        });
        if (!has_sense) throw ConfigError("bin workload needs a sensing phase");
    }
}

// Number of payload symbols after the preamble: the mandatory 8-symbol block
// plus ceil-many coded blocks of CR+4 symbols.
inline int payload_symbols(const LoRaConfig& cfg) {
    validate(cfg);
    const int de = cfg.low_data_rate_optimize ? 1 : 0;
    const int ih = cfg.explicit_header ? 0 : 1;
    const int numerator = 8 * cfg.payload_bytes - 4 * cfg.spreading_factor + 28 +
                          16 * (cfg.crc_on ? 1 : 0) - 20 * ih;
    const int denominator = 4 * (cfg.spreading_factor - 2 * de);
    const int blocks = numerator > 0 ? (numerator + denominator - 1) / denominator : 0;
    return 8 + blocks * (cfg.coding_rate + 4);
}

inline double symbol_time_s(const LoRaConfig& cfg) {
    return std::exp2(cfg.spreading_factor) / cfg.bandwidth_hz;
}

inline double time_on_air_s(const LoRaConfig& cfg) {
    const double t_sym = symbol_time_s(cfg);
    return (cfg.preamble_symbols + 4.25) * t_sym + payload_symbols(cfg) * t_sym;
}

// Back-solves the effective transmit power from a measured packet energy.
inline RadioEnergyModel calibrate_radio(double target_tx_energy_j, const LoRaConfig& cfg) {
    if (target_tx_energy_j <= 0.0) throw DomainError("target energy must be positive");
    return {target_tx_energy_j / time_on_air_s(cfg)};
}

inline double tx_energy_j(const LoRaConfig& cfg, const RadioEnergyModel& radio) {
    return radio.effective_tx_power_w * time_on_air_s(cfg);
}

// Energy of one complete transaction (per packet for the dual-capture
// variant, where each motion powers its own packet).
inline double transaction_energy_j(const WorkloadSpec& spec, const RadioEnergyModel& radio) {
    double total = tx_energy_j(spec.radio, radio);
    for (const auto& p : spec.phases) total += p.energy_j;
    return total;
}

// Maps an ultrasonic headroom reading to one of five fill buckets of
// usable_depth/5 millimetres each.
inline FillCategory fill_category(double reading_mm, const SensorModel& sensor) {
    if (reading_mm < 0.0) throw DomainError("reading must be nonnegative");
    const double fill = sensor.usable_depth_mm - std::clamp(reading_mm, 0.0, sensor.usable_depth_mm);
    const int bucket = std::min(4, static_cast<int>(std::floor(fill / (sensor.usable_depth_mm / 5.0))));
    return static_cast<FillCategory>(bucket);
}

// Perturbs a true headroom with a signed gamma-distributed magnitude whose
// mean/sd match the characterized absolute error, clamped to the usable
// range.
inline double sense_with_error(double true_headroom_mm, const SensorModel& sensor, RngEngine& rng) {
    if (sensor.abs_error_mean_mm <= 0.0) return true_headroom_mm;
    const double mean = sensor.abs_error_mean_mm;
    const double sd = sensor.abs_error_sd_mm;
    const double shape = (mean / sd) * (mean / sd);
    const double scale = sd * sd / mean;
    std::gamma_distribution<double> magnitude(shape, scale);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const double sign = uni(rng) < 0.5 ? -1.0 : 1.0;
    const double reading = true_headroom_mm + sign * magnitude(rng);
    return std::clamp(reading, 0.0, sensor.usable_depth_mm);
}

} // namespace kinesim::transaction
