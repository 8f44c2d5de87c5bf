#pragma once

#include <cstdint>
#include <future>
#include <string>
#include <vector>

#include "kinesim/drivetrain.hpp"
#include "kinesim/errors.hpp"
#include "kinesim/motion.hpp"
#include "kinesim/powerpath.hpp"
#include "kinesim/rng.hpp"
#include "kinesim/transaction.hpp"

// Per-event and full-deployment simulation: harvest integration over each
// actuation, trigger-on-close sequencing, transaction attempts, channel
// loss, and outcome aggregation.

namespace kinesim::sim {

enum class EventOutcome { single_packet, double_packet, no_charge, channel_loss };

inline const char* to_string(EventOutcome o) {
    switch (o) {
    case EventOutcome::single_packet: return "single_packet";
    case EventOutcome::double_packet: return "double_packet";
    case EventOutcome::no_charge: return "no_charge";
    case EventOutcome::channel_loss: return "channel_loss";
    }
    return "?";
}

struct DeploymentConfig {
    motion::ActuationDistribution distribution;
    motion::ProfileShape profile_shape = motion::ProfileShape::half_sine;
    std::size_t event_count = 1;
    transaction::WorkloadSpec workload;
    transaction::RadioEnergyModel radio;
    powerpath::PowerPathConfig power;
    double gear_ratio = 1.0;
    drivetrain::GeneratorModel generator;
    double channel_loss_probability = 0.0;
    double retrigger_probability = 0.0;   // chance of a rapid re-opening after a transaction
    double retrigger_window_s = 2.0;      // debounce window for the re-trigger
    double integration_dt_s = 1e-3;
    std::uint64_t seed = 0;
    std::string label = "deployment";
    std::string fingerprint;
};

inline void validate(const DeploymentConfig& cfg) {
    powerpath::validate(cfg.power);
    transaction::validate(cfg.workload);
    if (cfg.event_count < 1) throw ConfigError("event_count must be at least 1");
    if (cfg.channel_loss_probability < 0.0 || cfg.channel_loss_probability > 1.0)
        throw ConfigError("channel_loss_probability must be in [0, 1]");
    if (cfg.retrigger_probability < 0.0 || cfg.retrigger_probability > 1.0)
        throw ConfigError("retrigger_probability must be in [0, 1]");
    if (cfg.gear_ratio <= 0.0) throw ConfigError("gear ratio must be positive");
    if (cfg.generator.ke_v_per_rpm <= 0.0 || cfg.generator.r_internal_ohm <= 0.0)
        throw ConfigError("generator model needs positive ke and internal resistance");
    if (cfg.integration_dt_s <= 0.0) throw ConfigError("integration step must be positive");
}

struct EventRecord {
    motion::ActuationEvent event;
    double peak_voltage_v = 0.0;
    EventOutcome outcome = EventOutcome::no_charge;
};

struct OutcomeCounts {
    std::size_t single_packet = 0;
    std::size_t double_packet = 0;
    std::size_t no_charge = 0;
    std::size_t channel_loss = 0;

    std::size_t total() const { return single_packet + double_packet + no_charge + channel_loss; }
};

struct DeploymentReport {
    std::string label;
    std::string config_fingerprint;
    std::uint64_t seed = 0;
    std::size_t event_count = 0;
    OutcomeCounts counts;
    std::size_t packets_produced = 0;
    std::size_t packets_delivered = 0;
    std::size_t delivered_events = 0;  // events with at least one delivered packet
    double success_rate = 0.0;
    std::vector<EventRecord> per_event;
};

struct EventResult {
    EventOutcome outcome = EventOutcome::no_charge;
    powerpath::CapacitorState state;
    double peak_voltage_v = 0.0;
    int packets_produced = 0;
    int packets_delivered = 0;
};

namespace detail {

// Whether the wake trigger fires for this event. The bin tilt switch closes
// with the lid even after a partial opening; door and cabinet limit switches
// are missed by a weak or partial closure.
inline bool trigger_fires(const transaction::Variant variant, bool partial) {
    if (!partial) return true;
    return variant == transaction::Variant::bin_sf10;
}

struct Attempt {
    bool produced = false;
    bool delivered = false;
};

inline Attempt attempt_transaction(powerpath::CapacitorState& cap, double energy_j,
                                   const DeploymentConfig& cfg, RngEngine& rng) {
    Attempt a;
    if (cap.voltage_v < cfg.power.wake_threshold_v) return a;
    const auto discharge = powerpath::discharge_transaction(cap, energy_j, cfg.power);
    if (!discharge.success) return a;
    cap = discharge.state;
    a.produced = true;
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    a.delivered = uni(rng) >= cfg.channel_loss_probability;
    return a;
}

} // namespace detail

// Runs one actuation: harvest over the opening and closing profiles, attempt
// the transaction at the trigger, optionally handle a rapid re-opening
// within the debounce window, then leak over the gap to the next event.
inline EventResult simulate_event(const powerpath::CapacitorState& start,
                                  const motion::ActuationEvent& event,
                                  const DeploymentConfig& cfg, RngEngine& rng) {
    const double energy = transaction::transaction_energy_j(cfg.workload, cfg.radio);
    const bool dual = cfg.workload.variant == transaction::Variant::cabinet_dual;

    EventResult result;
    powerpath::CapacitorState cap = start;
    result.peak_voltage_v = cap.voltage_v;

    auto charge_phase = [&](motion::MotionPhase phase) {
        const auto profile = motion::angular_velocity_profile(event, phase, cfg.profile_shape);
        const auto summary = powerpath::charge_over_profile(profile, cfg.gear_ratio, cfg.generator,
                                                            cfg.power, cap, cfg.integration_dt_s);
        cap = summary.final_state;
        result.peak_voltage_v = std::max(result.peak_voltage_v, summary.peak_voltage_v);
    };

    const bool triggers = detail::trigger_fires(cfg.workload.variant, event.partial);

    charge_phase(motion::MotionPhase::opening);
    if (dual && triggers) {
        const auto open_attempt = detail::attempt_transaction(cap, energy, cfg, rng);
        result.packets_produced += open_attempt.produced;
        result.packets_delivered += open_attempt.delivered;
    }
    charge_phase(motion::MotionPhase::closing);

    if (triggers) {
        const auto close_attempt = detail::attempt_transaction(cap, energy, cfg, rng);
        result.packets_produced += close_attempt.produced;
        result.packets_delivered += close_attempt.delivered;

        // Rapid re-opening inside the debounce window: the residual plus the
        // recharge from the repeated motion may cross the threshold again.
        if (!dual && close_attempt.produced && cfg.retrigger_probability > 0.0) {
            std::uniform_real_distribution<double> uni(0.0, 1.0);
            if (uni(rng) < cfg.retrigger_probability) {
                const double delay = uni(rng) * cfg.retrigger_window_s;
                cap = powerpath::apply_leakage(cap, delay, cfg.power);
                charge_phase(motion::MotionPhase::opening);
                charge_phase(motion::MotionPhase::closing);
                const auto again = detail::attempt_transaction(cap, energy, cfg, rng);
                result.packets_produced += again.produced;
                result.packets_delivered += again.delivered;
            }
        }
    }

    if (result.packets_produced == 0) result.outcome = EventOutcome::no_charge;
    else if (result.packets_delivered == 0) result.outcome = EventOutcome::channel_loss;
    else if (result.packets_produced >= 2) result.outcome = EventOutcome::double_packet;
    else result.outcome = EventOutcome::single_packet;

    result.state = powerpath::apply_leakage(cap, event.gap_to_next_s, cfg.power);
    return result;
}

namespace detail {

inline DeploymentReport run_events(const std::vector<motion::ActuationEvent>& events,
                                   const DeploymentConfig& cfg) {
    DeploymentReport report;
    report.label = cfg.label;
    report.config_fingerprint = cfg.fingerprint;
    report.seed = cfg.seed;
    report.event_count = events.size();
    report.per_event.reserve(events.size());

    powerpath::CapacitorState cap;  // deployment starts with an empty buffer
    for (std::size_t i = 0; i < events.size(); ++i) {
        RngEngine event_rng = derive_stream(cfg.seed, "outcome", i);
        const EventResult r = simulate_event(cap, events[i], cfg, event_rng);
        cap = r.state;
        report.per_event.push_back({events[i], r.peak_voltage_v, r.outcome});
        report.packets_produced += std::size_t(r.packets_produced);
        report.packets_delivered += std::size_t(r.packets_delivered);
        if (r.packets_delivered > 0) ++report.delivered_events;
        switch (r.outcome) {
        case EventOutcome::single_packet: ++report.counts.single_packet; break;
        case EventOutcome::double_packet: ++report.counts.double_packet; break;
        case EventOutcome::no_charge: ++report.counts.no_charge; break;
        case EventOutcome::channel_loss: ++report.counts.channel_loss; break;
        }
    }
    report.success_rate =
        events.empty() ? 0.0 : double(report.delivered_events) / double(events.size());
    return report;
}

} // namespace detail

inline std::vector<motion::ActuationEvent> sample_events(const DeploymentConfig& cfg) {
    RngEngine rng = derive_stream(cfg.seed, "events");
    std::vector<motion::ActuationEvent> events;
    events.reserve(cfg.event_count);
    for (std::size_t i = 0; i < cfg.event_count; ++i)
        events.push_back(motion::sample_actuation(cfg.distribution, rng));
    return events;
}

inline DeploymentReport simulate_deployment(const DeploymentConfig& cfg) {
    validate(cfg);
    return detail::run_events(sample_events(cfg), cfg);
}

// Runs real encoder logs through the same pipeline.
inline DeploymentReport replay_trace(const std::vector<motion::TraceRecord>& trace,
                                     const DeploymentConfig& cfg,
                                     double open_threshold_deg = 5.0) {
    validate(cfg);
    const auto segmented = motion::segment_actuations(trace, open_threshold_deg);
    if (segmented.events.empty())
        throw InsufficientDataError("trace contains no complete actuation");
    return detail::run_events(segmented.events, cfg);
}

// Monte Carlo replicates with derived per-replicate seeds; results are
// independent of execution order, so replicates may run in parallel.
inline std::vector<DeploymentReport> simulate_replicates(const DeploymentConfig& cfg,
                                                         std::size_t replicates,
                                                         bool parallel = false) {
    std::vector<DeploymentReport> reports(replicates);
    auto run_one = [&](std::size_t i) {
        DeploymentConfig c = cfg;
        c.seed = derive_seed(cfg.seed, "replicate", i);
        c.label = cfg.label + "/r" + std::to_string(i);
        return simulate_deployment(c);
    };
    if (parallel) {
        std::vector<std::future<DeploymentReport>> futures;
        futures.reserve(replicates);
        for (std::size_t i = 0; i < replicates; ++i)
            futures.push_back(std::async(std::launch::async, run_one, i));
        for (std::size_t i = 0; i < replicates; ++i) reports[i] = futures[i].get();
    } else {
        for (std::size_t i = 0; i < replicates; ++i) reports[i] = run_one(i);
    }
    return reports;
}

struct SummaryRow {
    std::string label;
    std::size_t actuations = 0;
    std::size_t packets = 0;  // events that delivered at least one packet
    double success_pct = 0.0;
};

inline std::vector<SummaryRow> summarize(const std::vector<DeploymentReport>& reports) {
    std::vector<SummaryRow> rows;
    SummaryRow total{"total", 0, 0, 0.0};
    for (const auto& r : reports) {
        rows.push_back({r.label, r.event_count, r.delivered_events, 100.0 * r.success_rate});
        total.actuations += r.event_count;
        total.packets += r.delivered_events;
    }
    if (!rows.empty()) {
        total.success_pct =
            total.actuations > 0 ? 100.0 * double(total.packets) / double(total.actuations) : 0.0;
        rows.push_back(total);
    }
    return rows;
}

inline std::vector<SummaryRow> summarize(const DeploymentReport& report) {
    return summarize(std::vector<DeploymentReport>{report});
}

} // namespace kinesim::sim
