#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "kinesim/drivetrain.hpp"
#include "kinesim/errors.hpp"
#include "kinesim/motion.hpp"

// Rectified-capacitor energy buffer: charging integration, leakage,
// converter cutoff arithmetic, and the event-triggered power gate.

namespace kinesim::powerpath {

struct PowerPathConfig {
    double capacitance_f = 1000e-6;
    double cap_rating_v = 25.0;
    double rectifier_drop_v = 0.6;      // full bridge, two Schottky drops
    double converter_cutoff_v = 3.0;
    double wake_threshold_v = 11.5;
    double converter_efficiency = 0.85;
    double leakage_tau_s = 600.0;       // exponential self-discharge constant
    double coupling_efficiency = 0.85;  // drivetrain/electrical charging losses
};

struct CapacitorState {
    double voltage_v = 0.0;
    double time_s = 0.0;
};

enum class GateState { harvesting, triggered, active, post_transaction };

inline void validate(const PowerPathConfig& cfg) {
    if (cfg.capacitance_f <= 0.0) throw ConfigError("capacitance must be positive");
    if (!(0.0 < cfg.converter_cutoff_v && cfg.converter_cutoff_v < cfg.wake_threshold_v &&
          cfg.wake_threshold_v <= cfg.cap_rating_v))
        throw ConfigError("need 0 < converter_cutoff < wake_threshold <= cap_rating");
    if (cfg.converter_efficiency <= 0.0 || cfg.converter_efficiency > 1.0)
        throw ConfigError("converter_efficiency must be in (0, 1]");
    if (cfg.coupling_efficiency <= 0.0 || cfg.coupling_efficiency > 1.0)
        throw ConfigError("coupling_efficiency must be in (0, 1]");
    if (cfg.rectifier_drop_v < 0.0) throw ConfigError("rectifier drop must be nonnegative");
    if (cfg.leakage_tau_s <= 0.0) throw ConfigError("leakage tau must be positive");
}

// Extractable energy between a charged voltage and the converter cutoff.
inline double usable_energy(double capacitance_f, double v_charged, double v_cutoff) {
    if (v_cutoff < 0.0 || v_charged < v_cutoff)
        throw DomainError("usable_energy requires v_charged >= v_cutoff >= 0");
    return 0.5 * capacitance_f * (v_charged * v_charged - v_cutoff * v_cutoff);
}

// Inverse of usable_energy in the charged voltage.
inline double required_charged_voltage(double capacitance_f, double e_usable_j, double v_cutoff) {
    if (e_usable_j < 0.0) throw DomainError("usable energy must be nonnegative");
    return std::sqrt(2.0 * e_usable_j / capacitance_f + v_cutoff * v_cutoff);
}

inline CapacitorState apply_leakage(const CapacitorState& state, double elapsed_s,
                                    const PowerPathConfig& cfg) {
    if (elapsed_s < 0.0) throw DomainError("elapsed time must be nonnegative");
    return {state.voltage_v * std::exp(-elapsed_s / cfg.leakage_tau_s), state.time_s + elapsed_s};
}

namespace detail {

// Explicit-Euler step shared by the trajectory and summary integrators:
//   dV/dt = coupling_efficiency * I(t) / C - V / leakage_tau
// with I from the rectifier conduction model. omega_deg_s is sampled at the
// start of each step.
template <typename OmegaFn, typename Observer>
inline CapacitorState integrate(OmegaFn&& omega_deg_s, double duration_s, double ratio,
                                const drivetrain::GeneratorModel& gen, const PowerPathConfig& cfg,
                                CapacitorState state, double dt_s, Observer&& observe) {
    if (dt_s <= 0.0) throw DomainError("integration step must be positive");
    const auto steps = static_cast<std::size_t>(std::ceil(duration_s / dt_s - 1e-12));
    observe(state, 0.0, 0.0);
    double t = 0.0;
    for (std::size_t i = 0; i < steps; ++i) {
        const double h = std::min(dt_s, duration_s - t);
        const double rpm = ratio * omega_deg_s(t) / 6.0;  // deg/s -> rpm
        const double current = drivetrain::charging_current(gen, rpm, state.voltage_v,
                                                            cfg.rectifier_drop_v);
        const double dv = cfg.coupling_efficiency * current / cfg.capacitance_f -
                          state.voltage_v / cfg.leakage_tau_s;
        state.voltage_v = std::clamp(state.voltage_v + h * dv, 0.0, cfg.cap_rating_v);
        state.time_s += h;
        t += h;
        observe(state, drivetrain::back_emf(gen, rpm), current);
    }
    return state;
}

} // namespace detail

// Charging trajectory over one motion phase, sampled every dt (plus the
// initial state). The final element carries the end time.
inline std::vector<CapacitorState> integrate_charging(const motion::MotionProfile& profile,
                                                      double ratio,
                                                      const drivetrain::GeneratorModel& gen,
                                                      const PowerPathConfig& cfg,
                                                      const CapacitorState& start,
                                                      double dt_s = 1e-3) {
    std::vector<CapacitorState> trajectory;
    trajectory.reserve(static_cast<std::size_t>(profile.duration_s / dt_s) + 2);
    detail::integrate([&](double t) { return motion::angular_velocity_deg_s(profile, t); },
                      profile.duration_s, ratio, gen, cfg, start, dt_s,
                      [&](const CapacitorState& s, double, double) { trajectory.push_back(s); });
    return trajectory;
}

struct ChargeSummary {
    CapacitorState final_state;
    double peak_voltage_v = 0.0;
    double source_energy_j = 0.0;  // coupling-derated EMF-side energy input
};

// Same integration without storing the trajectory; used by the event
// simulator. source_energy accumulates eta * EMF * I for energy accounting.
inline ChargeSummary charge_over_profile(const motion::MotionProfile& profile, double ratio,
                                         const drivetrain::GeneratorModel& gen,
                                         const PowerPathConfig& cfg, const CapacitorState& start,
                                         double dt_s = 1e-3) {
    ChargeSummary summary;
    summary.peak_voltage_v = start.voltage_v;
    summary.final_state = detail::integrate(
        [&](double t) { return motion::angular_velocity_deg_s(profile, t); }, profile.duration_s,
        ratio, gen, cfg, start, dt_s, [&](const CapacitorState& s, double emf, double current) {
            summary.peak_voltage_v = std::max(summary.peak_voltage_v, s.voltage_v);
            summary.source_energy_j += cfg.coupling_efficiency * emf * current * dt_s;
        });
    return summary;
}

// Power-gate transition function. The gate only reaches `active` from
// `triggered` with the buffer at or above the wake threshold, and returns to
// harvesting with zero idle draw after a transaction.
inline GateState gate_step(GateState state, bool trigger_fired, double v,
                           const PowerPathConfig& cfg) {
    switch (state) {
    case GateState::harvesting:
        return trigger_fired ? GateState::triggered : GateState::harvesting;
    case GateState::triggered:
        return v >= cfg.wake_threshold_v ? GateState::active : GateState::harvesting;
    case GateState::active:
        return GateState::post_transaction;
    case GateState::post_transaction:
        return GateState::harvesting;
    }
    return GateState::harvesting;
}

struct DischargeResult {
    bool success = false;
    CapacitorState state;  // unchanged when the draw cannot be supported
};

// Draws one transaction's energy through the converter. Fails without
// mutating state when the buffer would fall below the cutoff.
inline DischargeResult discharge_transaction(const CapacitorState& start, double energy_j,
                                             const PowerPathConfig& cfg) {
    if (energy_j < 0.0) throw DomainError("transaction energy must be nonnegative");
    const double radicand = start.voltage_v * start.voltage_v -
                            2.0 * energy_j / (cfg.converter_efficiency * cfg.capacitance_f);
    if (radicand < 0.0) return {false, start};
    const double v_after = std::sqrt(radicand);
    if (v_after < cfg.converter_cutoff_v) return {false, start};
    return {true, {v_after, start.time_s}};
}

} // namespace kinesim::powerpath
