#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "kinesim/drivetrain.hpp"
#include "kinesim/errors.hpp"
#include "kinesim/motion.hpp"
#include "kinesim/powerpath.hpp"
#include "kinesim/rng.hpp"

// Inverse design: from a workload energy and hinge-speed envelope, derive
// the required average power, target generator speed, gear ratio, buffer
// capacitance and wake threshold, plus a Monte Carlo energy margin.

namespace kinesim::sizing {

struct SizingSpec {
    double transaction_energy_j = 61e-3;
    double harvest_window_s = 1.2;
    double hinge_rpm_min = 17.85;
    double hinge_rpm_max = 27.8;
    double hinge_rpm_reference = 25.82;
    drivetrain::GeneratorModel generator;
    double load_reference_ohm = 470.0;
    double cap_rating_v = 25.0;
    double converter_cutoff_v = 3.0;
    double headroom_fraction = 0.5;
};

struct SizingResult {
    double required_power_w = 0.0;
    double target_generator_rpm = 0.0;
    double gear_ratio = 0.0;
    double capacitance_f = 0.0;
    double wake_threshold_v = 0.0;
    double rpm_band_min = 0.0;
    double rpm_band_max = 0.0;
    double margin_fraction = 0.0;  // fraction of sampled actuations meeting the budget
};

inline void validate(const SizingSpec& spec) {
    if (spec.harvest_window_s <= 0.0) throw ConfigError("harvest window must be positive");
    if (!(spec.hinge_rpm_min <= spec.hinge_rpm_reference &&
          spec.hinge_rpm_reference <= spec.hinge_rpm_max))
        throw ConfigError("need hinge_rpm_min <= reference <= max");
    if (spec.headroom_fraction <= 0.0 || spec.headroom_fraction > 1.0)
        throw ConfigError("headroom_fraction must be in (0, 1]");
    if (spec.generator.ke_v_per_rpm <= 0.0 || spec.generator.r_internal_ohm <= 0.0)
        throw ConfigError("generator model needs positive ke and internal resistance");
    if (spec.load_reference_ohm <= 0.0) throw ConfigError("reference load must be positive");
    if (spec.transaction_energy_j < 0.0) throw ConfigError("transaction energy must be nonnegative");
    if (spec.converter_cutoff_v <= 0.0) throw ConfigError("converter cutoff must be positive");
}

inline double required_average_power(double energy_j, double window_s) {
    if (window_s <= 0.0) throw DomainError("window must be positive");
    return energy_j / window_s;
}

// Shaft speed at which the generator delivers the requested power into the
// load; closed form of power_into_load solved for rpm.
inline double target_generator_speed(const drivetrain::GeneratorModel& gen, double load_ohm,
                                     double power_w) {
    if (power_w <= 0.0) throw DomainError("power must be positive");
    if (load_ohm <= 0.0) throw DomainError("load must be positive");
    return (load_ohm + gen.r_internal_ohm) * std::sqrt(power_w / load_ohm) / gen.ke_v_per_rpm;
}

namespace detail {

// Zero-energy workloads still need the rail to come up, so the target speed
// floors at the speed where the EMF reaches the converter cutoff.
inline double target_speed(const SizingSpec& spec) {
    const double floor_rpm = spec.converter_cutoff_v / spec.generator.ke_v_per_rpm;
    if (spec.transaction_energy_j <= 0.0) return floor_rpm;
    const double power = required_average_power(spec.transaction_energy_j, spec.harvest_window_s);
    return std::max(floor_rpm,
                    target_generator_speed(spec.generator, spec.load_reference_ohm, power));
}

} // namespace detail

inline double required_gear_ratio(const SizingSpec& spec) {
    validate(spec);
    return detail::target_speed(spec) / spec.hinge_rpm_reference;
}

inline constexpr std::array<double, 12> kE12Mantissas = {1.0, 1.2, 1.5, 1.8, 2.2, 2.7,
                                                         3.3, 3.9, 4.7, 5.6, 6.8, 8.2};

// Rounds a voltage up to the next 0.05 V step (exact multiples stay put).
inline double round_up_threshold(double v) {
    return std::ceil(v / 0.05 - 1e-9) * 0.05;
}

struct CapacitorChoice {
    double capacitance_f = 0.0;
    double wake_threshold_v = 0.0;
};

// Smallest E12-series capacitance whose (rounded) required charged voltage
// stays within the headroom-derated rating.
inline CapacitorChoice select_capacitance(double energy_j, double cutoff_v, double rating_v,
                                          double headroom_fraction) {
    if (energy_j < 0.0) throw DomainError("energy must be nonnegative");
    const double v_limit = headroom_fraction * rating_v;
    if (round_up_threshold(cutoff_v) > v_limit)
        throw InfeasibleError("converter cutoff exceeds the usable voltage headroom");
    for (int exponent = -9; exponent <= 1; ++exponent) {
        for (double mantissa : kE12Mantissas) {
            const double c = mantissa * std::pow(10.0, exponent);
            const double v_req = powerpath::required_charged_voltage(c, energy_j, cutoff_v);
            const double threshold = round_up_threshold(v_req);
            if (threshold <= v_limit) return {c, threshold};
        }
    }
    throw InfeasibleError("no E12 capacitance satisfies the voltage headroom");
}

// Per-event harvest bookkeeping consistent with how the target speed is
// derived: the generator is treated as loaded with the reference resistance
// at the event's closing-phase speed for the event's combined window.
inline double event_harvest_energy_j(const SizingSpec& spec, double gear_ratio,
                                     const motion::ActuationEvent& event) {
    const double close_rpm = motion::hinge_speed_rpm(event.opening_angle_deg,
                                                     event.closing_duration_s);
    const double power = drivetrain::power_into_load(
        spec.generator, drivetrain::generator_rpm(close_rpm, gear_ratio), spec.load_reference_ohm);
    return power * (event.opening_duration_s + event.closing_duration_s);
}

inline bool meets_budget(const SizingSpec& spec, double gear_ratio,
                         const motion::ActuationEvent& event) {
    return event_harvest_energy_j(spec, gear_ratio, event) >=
           spec.transaction_energy_j * (1.0 - 1e-9);
}

// Nominal design-point check: the reference speed held over the harvest
// window must supply the transaction energy.
inline bool nominal_meets_budget(const SizingSpec& spec, double gear_ratio) {
    const double rpm = drivetrain::generator_rpm(spec.hinge_rpm_reference, gear_ratio);
    const double harvested =
        drivetrain::power_into_load(spec.generator, rpm, spec.load_reference_ohm) *
        spec.harvest_window_s;
    return harvested >= spec.transaction_energy_j * (1.0 - 1e-9);
}

inline SizingResult size_system(const SizingSpec& spec) {
    validate(spec);
    SizingResult result;
    result.required_power_w = spec.harvest_window_s > 0.0
                                  ? required_average_power(spec.transaction_energy_j, spec.harvest_window_s)
                                  : 0.0;
    result.target_generator_rpm = detail::target_speed(spec);
    result.gear_ratio = result.target_generator_rpm / spec.hinge_rpm_reference;
    const auto choice = select_capacitance(spec.transaction_energy_j, spec.converter_cutoff_v,
                                           spec.cap_rating_v, spec.headroom_fraction);
    result.capacitance_f = choice.capacitance_f;
    result.wake_threshold_v = choice.wake_threshold_v;
    result.rpm_band_min = spec.hinge_rpm_min * result.gear_ratio;
    result.rpm_band_max = spec.hinge_rpm_max * result.gear_ratio;
    result.margin_fraction = nominal_meets_budget(spec, result.gear_ratio) ? 1.0 : 0.0;
    return result;
}

// As above, with the margin estimated by Monte Carlo over sampled actuations.
inline SizingResult size_system(const SizingSpec& spec, const motion::ActuationDistribution& dist,
                                std::size_t samples, std::uint64_t seed) {
    SizingResult result = size_system(spec);
    if (samples == 0) return result;
    RngEngine rng = derive_stream(seed, "sizing-margin");
    std::size_t met = 0;
    for (std::size_t i = 0; i < samples; ++i) {
        const auto event = motion::sample_actuation(dist, rng);
        if (meets_budget(spec, result.gear_ratio, event)) ++met;
    }
    result.margin_fraction = double(met) / double(samples);
    return result;
}

} // namespace kinesim::sizing
