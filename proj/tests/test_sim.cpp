#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "kinesim/report.hpp"
#include "kinesim/sim.hpp"
#include "trace_synthesis.hpp"

using namespace kinesim;
using namespace kinesim::sim;
using Catch::Approx;

namespace {

// Deployment-fit bin configuration, matching the bundled preset.
DeploymentConfig bin_config(std::size_t events = 2000, std::uint64_t seed = 7) {
    DeploymentConfig cfg;
    cfg.distribution.angle_mean_deg = 72.5;
    cfg.distribution.angle_cv = 0.10;
    cfg.distribution.open_duration_mean_s = 0.70;
    cfg.distribution.open_duration_cv = 0.10;
    cfg.distribution.close_duration_mean_s = 0.45;
    cfg.distribution.close_duration_cv = 0.10;
    cfg.distribution.partial_probability = 0.005;
    cfg.distribution.partial_angle_min_deg = 5.0;
    cfg.distribution.partial_angle_max_deg = 30.0;
    cfg.distribution.inter_arrival_mean_s = 300.0;
    cfg.event_count = events;
    cfg.workload.variant = transaction::Variant::bin_sf10;
    cfg.workload.phases = {{"boot", 0.45e-3}, {"sense", 3.0e-3}};
    cfg.workload.radio.spreading_factor = 10;
    cfg.workload.radio.payload_bytes = 8;
    cfg.radio = transaction::calibrate_radio(57.5e-3, cfg.workload.radio);
    cfg.power.capacitance_f = 1000e-6;
    cfg.power.cap_rating_v = 25.0;
    cfg.power.rectifier_drop_v = 0.6;
    cfg.power.converter_cutoff_v = 3.0;
    cfg.power.wake_threshold_v = 11.5;
    cfg.power.converter_efficiency = 1.0;
    cfg.power.leakage_tau_s = 600.0;
    cfg.power.coupling_efficiency = 0.85;
    cfg.gear_ratio = 93860.0 / 2197.0;
    cfg.generator = {12e-3, 150.0, 24.0};
    cfg.channel_loss_probability = 0.002;
    cfg.retrigger_probability = 0.0012;
    cfg.retrigger_window_s = 2.0;
    cfg.seed = seed;
    cfg.label = "bin-test";
    cfg.fingerprint = "test";
    return cfg;
}

motion::ActuationEvent mean_event() { return {72.5, 0.70, 0.45, 0.0, false}; }

} // namespace

TEST_CASE("a partial actuation from residual charge produces no packet") {
    const auto cfg = bin_config();
    motion::ActuationEvent partial{10.0, 0.70, 0.45, 0.0, true};
    RngEngine rng(1);
    const auto result = simulate_event({3.0, 0.0}, partial, cfg, rng);
    CHECK(result.outcome == EventOutcome::no_charge);
    CHECK(result.packets_produced == 0);
    CHECK(result.peak_voltage_v < cfg.power.wake_threshold_v);
}

TEST_CASE("the nominal actuation charges through the threshold and delivers") {
    const auto cfg = bin_config();
    RngEngine rng(2);
    const auto result = simulate_event({3.0, 0.0}, mean_event(), cfg, rng);
    CHECK(result.outcome == EventOutcome::single_packet);
    CHECK(result.peak_voltage_v >= 11.5);
    CHECK(result.state.voltage_v >= cfg.power.converter_cutoff_v);
}

TEST_CASE("certain channel loss turns a charged event into channel_loss") {
    auto cfg = bin_config();
    cfg.channel_loss_probability = 1.0;
    cfg.retrigger_probability = 0.0;
    RngEngine rng(3);
    const auto result = simulate_event({3.0, 0.0}, mean_event(), cfg, rng);
    CHECK(result.outcome == EventOutcome::channel_loss);
    CHECK(result.packets_produced == 1);
    CHECK(result.packets_delivered == 0);
}

TEST_CASE("a crossing above threshold that cannot fund the draw stays no_charge") {
    auto cfg = bin_config();
    cfg.workload.phases = {{"boot", 0.45e-3}, {"sense", 200.0}};  // absurd 200 J draw
    RngEngine rng(4);
    const auto result = simulate_event({3.0, 0.0}, mean_event(), cfg, rng);
    CHECK(result.peak_voltage_v >= cfg.power.wake_threshold_v);
    CHECK(result.outcome == EventOutcome::no_charge);
}

TEST_CASE("outcome counts always partition the event set") {
    for (std::uint64_t seed : {1ull, 7ull, 99ull}) {
        const auto report = simulate_deployment(bin_config(1500, seed));
        REQUIRE(report.counts.total() == report.event_count);
    }
    auto all_partial = bin_config(300);
    all_partial.distribution.partial_probability = 1.0;
    const auto report = simulate_deployment(all_partial);
    CHECK(report.counts.total() == report.event_count);
    CHECK(report.counts.no_charge == report.event_count);
    CHECK(report.success_rate == 0.0);
}

TEST_CASE("no packet is recorded below the wake threshold") {
    const auto report = simulate_deployment(bin_config(3000, 5));
    for (const auto& rec : report.per_event) {
        if (rec.outcome != EventOutcome::no_charge) REQUIRE(rec.peak_voltage_v >= 11.5);
    }
}

TEST_CASE("capacitor state stays within its rating across a deployment") {
    const auto cfg = bin_config(500, 21);
    auto events = sample_events(cfg);
    powerpath::CapacitorState cap;
    for (std::size_t i = 0; i < events.size(); ++i) {
        RngEngine rng = derive_stream(cfg.seed, "outcome", i);
        const auto r = simulate_event(cap, events[i], cfg, rng);
        REQUIRE(r.state.voltage_v >= 0.0);
        REQUIRE(r.state.voltage_v <= cfg.power.cap_rating_v);
        if (r.packets_delivered > 0)
            REQUIRE(r.state.voltage_v >= cfg.power.converter_cutoff_v - 1e-12);
        cap = r.state;
    }
}

TEST_CASE("reports are byte-identical for a fixed seed") {
    const auto a = simulate_deployment(bin_config(800, 4242));
    const auto b = simulate_deployment(bin_config(800, 4242));
    CHECK(report::to_json(a, true).dump() == report::to_json(b, true).dump());
    const auto c = simulate_deployment(bin_config(800, 4243));
    CHECK(report::to_json(a, true).dump() != report::to_json(c, true).dump());
}

TEST_CASE("replaying a synthesized trace matches simulating its events") {
    auto cfg = bin_config();
    cfg.channel_loss_probability = 0.0;
    cfg.retrigger_probability = 0.0;

    RngEngine gen(31);
    std::vector<motion::ActuationEvent> events;
    for (int i = 0; i < 30; ++i) {
        auto ev = motion::sample_actuation(cfg.distribution, gen);
        ev.gap_to_next_s = std::min(ev.gap_to_next_s, 30.0);  // keep the trace small
        events.push_back(ev);
    }

    const auto trace = testutil::synthesize_trace(events, 1000.0);
    const auto replayed = replay_trace(trace, cfg);
    REQUIRE(replayed.event_count == events.size());

    const auto direct = sim::detail::run_events(events, cfg);
    REQUIRE(direct.event_count == replayed.event_count);
    for (std::size_t i = 0; i < events.size(); ++i) {
        REQUIRE(replayed.per_event[i].outcome == direct.per_event[i].outcome);
        REQUIRE(replayed.per_event[i].peak_voltage_v ==
                Approx(direct.per_event[i].peak_voltage_v).epsilon(0.05));
    }
    CHECK(replayed.delivered_events == events.size());  // loss disabled, full events
}

TEST_CASE("replay of a lone partial excursion yields one no_charge") {
    auto cfg = bin_config();
    cfg.channel_loss_probability = 0.0;
    const auto trace = testutil::synthesize_trace({{12.0, 0.4, 0.3, 0.0, false}}, 1000.0);
    const auto report = replay_trace(trace, cfg);
    REQUIRE(report.event_count == 1);
    CHECK(report.counts.no_charge == 1);
}

TEST_CASE("replay rejects traces without complete actuations") {
    const auto cfg = bin_config();
    std::vector<motion::TraceRecord> flat;
    for (int i = 0; i < 50; ++i) flat.push_back({i * 5, 0.0, true});
    CHECK_THROWS_AS(replay_trace(flat, cfg), InsufficientDataError);
}

TEST_CASE("parallel replicates equal sequential execution") {
    const auto cfg = bin_config(400, 11);
    const auto sequential = simulate_replicates(cfg, 4, false);
    const auto parallel = simulate_replicates(cfg, 4, true);
    REQUIRE(sequential.size() == parallel.size());
    for (std::size_t i = 0; i < sequential.size(); ++i)
        REQUIRE(report::to_json(sequential[i], true).dump() ==
                report::to_json(parallel[i], true).dump());
}

TEST_CASE("raising the wake threshold never helps delivery") {
    double prev = 2.0;
    for (double threshold = 9.0; threshold <= 14.01; threshold += 1.0) {
        auto cfg = bin_config(1500, 7);
        cfg.power.wake_threshold_v = threshold;
        const auto report = simulate_deployment(cfg);
        REQUIRE(report.success_rate <= prev + 1e-12);
        prev = report.success_rate;
    }
}

TEST_CASE("raising the gear ratio never sheds harvested energy") {
    const auto base = bin_config();
    const auto event = mean_event();
    double prev_peak = -1.0;
    for (double ratio = 20.0; ratio <= 60.01; ratio += 4.0) {
        auto cfg = base;
        cfg.gear_ratio = ratio;
        cfg.retrigger_probability = 0.0;
        RngEngine rng(55);
        const auto r = simulate_event({0.0, 0.0}, event, cfg, rng);
        REQUIRE(r.peak_voltage_v >= prev_peak - 1e-12);
        prev_peak = r.peak_voltage_v;
    }

    std::size_t prev_nc = std::size_t(-1);
    for (double ratio = 20.0; ratio <= 60.01; ratio += 10.0) {
        auto cfg = bin_config(1200, 7);
        cfg.gear_ratio = ratio;
        const auto report = simulate_deployment(cfg);
        REQUIRE(report.counts.no_charge <= prev_nc);
        prev_nc = report.counts.no_charge;
    }
}

TEST_CASE("dual-capture cabinets report both motions of a full cycle") {
    auto cfg = bin_config();
    cfg.workload.variant = transaction::Variant::cabinet_dual;
    cfg.workload.phases = {{"boot", 0.45e-3}};
    cfg.workload.radio.spreading_factor = 6;
    cfg.workload.radio.payload_bytes = 4;
    cfg.workload.radio.explicit_header = false;
    cfg.radio.effective_tx_power_w = 0.19363;
    cfg.channel_loss_probability = 0.0;
    cfg.retrigger_probability = 0.0;

    RngEngine rng(77);
    // warm start: dual capture fires on the open switch too
    auto first = simulate_event({12.0, 0.0}, mean_event(), cfg, rng);
    CHECK(first.outcome == EventOutcome::double_packet);
    CHECK(first.packets_produced == 2);

    auto partial = simulate_event({12.0, 0.0}, {10.0, 0.7, 0.45, 0.0, true}, cfg, rng);
    CHECK(partial.packets_produced == 0);
    CHECK(partial.outcome == EventOutcome::no_charge);
}

TEST_CASE("summaries mirror the per-deployment rows plus a total") {
    const auto a = simulate_deployment(bin_config(500, 1));
    const auto b = simulate_deployment(bin_config(700, 2));
    const auto rows = summarize({a, b});
    REQUIRE(rows.size() == 3);
    CHECK(rows[2].label == "total");
    CHECK(rows[2].actuations == a.event_count + b.event_count);
    CHECK(rows[2].packets == a.delivered_events + b.delivered_events);
    CHECK(rows[0].success_pct == Approx(100.0 * a.success_rate));

    CHECK(summarize(std::vector<DeploymentReport>{}).empty());

    // a 1640/1630 deployment prints as a 99.4% row
    sim::DeploymentReport fixed;
    fixed.label = "L1";
    fixed.event_count = 1640;
    fixed.delivered_events = 1630;
    fixed.success_rate = 1630.0 / 1640.0;
    const auto row = summarize(fixed);
    CHECK(row[0].actuations == 1640);
    CHECK(row[0].packets == 1630);
    CHECK(row[0].success_pct == Approx(99.39).margin(0.01));
}
