#include <catch2/catch_amalgamated.hpp>

#include "kinesim/config.hpp"
#include "kinesim/report.hpp"

using namespace kinesim;
using namespace kinesim::config;
using Catch::Approx;

namespace {

const char* kMinimalSim = R"(
[motion]
angle_mean_deg = 72.5
angle_cv = 0.10

[powerpath]
capacitance_uf = 1000
wake_threshold_v = 11.5
converter_efficiency = 1.0

[drivetrain]
stages = 65:13,38:13,38:13
ke_mv_per_rpm = 12
r_internal_ohm = 150

[workload]
variant = bin_sf10
phases = boot:0.45,sense:3.0
tx_energy_target_mj = 57.5

[radio]
spreading_factor = 10
payload_bytes = 8

[sim]
events = 100
seed = 7
channel_loss_probability = 0.002
)";

} // namespace

TEST_CASE("parse_config reads sections, comments and values") {
    const auto doc = parse_config("# header\n[sim]\nevents = 42\nseed = 9\n\n[motion]\nangle_cv = 0.1\n");
    CHECK(doc.has("sim.events"));
    CHECK(get_integer(doc, "sim.events", 0) == 42);
    CHECK(get_number(doc, "motion.angle_cv", 0.0) == Approx(0.1));
    CHECK(doc.has_section("sim"));
    CHECK_FALSE(doc.has_section("sizing"));
}

TEST_CASE("parse_config rejects malformed input") {
    CHECK_THROWS_AS(parse_config("[sim\nevents = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("events = 1\n"), ConfigError);          // key outside a section
    CHECK_THROWS_AS(parse_config("[sim]\nevents 1\n"), ConfigError);     // missing equals
    CHECK_THROWS_AS(parse_config("[sim]\nbogus_key = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[typo_section]\nevents = 1\n"), ConfigError);
}

TEST_CASE("typed accessors validate their input") {
    const auto doc = parse_config("[sim]\nevents = twelve\n[radio]\ncrc = maybe\n");
    CHECK_THROWS_AS(get_integer(doc, "sim.events", 0), ConfigError);
    CHECK_THROWS_AS(get_boolean(doc, "radio.crc", true), ConfigError);
}

TEST_CASE("overrides resolve bare and dotted key names") {
    auto doc = parse_config(kMinimalSim);
    apply_override(doc, "sim.events=555");
    CHECK(get_integer(doc, "sim.events", 0) == 555);
    apply_override(doc, "wake_threshold_v=10.5");
    CHECK(get_number(doc, "powerpath.wake_threshold_v", 0.0) == Approx(10.5));
    // unique prefix of sizing.transaction_energy_j
    apply_override(doc, "transaction_energy=4e-3");
    CHECK(get_number(doc, "sizing.transaction_energy_j", 0.0) == Approx(4e-3));
    CHECK_THROWS_AS(apply_override(doc, "no_such_key=1"), ConfigError);
    CHECK_THROWS_AS(apply_override(doc, "r_internal_ohm=10"), ConfigError);  // ambiguous
    CHECK_THROWS_AS(apply_override(doc, "garbage"), ConfigError);
}

TEST_CASE("fingerprints track content, not formatting") {
    auto a = parse_config("[sim]\nevents = 10\nseed = 1\n");
    auto b = parse_config("# comment\n[sim]\n seed = 1\n events = 10\n");
    CHECK(fingerprint(a) == fingerprint(b));
    apply_override(b, "sim.seed=2");
    CHECK(fingerprint(a) != fingerprint(b));
}

TEST_CASE("build_deployment wires every block") {
    const auto doc = parse_config(kMinimalSim);
    const auto cfg = build_deployment(doc, "unit");
    CHECK(cfg.event_count == 100);
    CHECK(cfg.seed == 7);
    CHECK(cfg.gear_ratio == Approx(93860.0 / 2197.0));
    CHECK(cfg.generator.ke_v_per_rpm == Approx(12e-3));
    CHECK(cfg.power.capacitance_f == Approx(1000e-6));
    CHECK(cfg.radio.effective_tx_power_w == Approx(57.5e-3 / 0.29696).epsilon(1e-6));
    CHECK(cfg.workload.phases.size() == 2);
    CHECK(cfg.label == "unit");
    CHECK(cfg.fingerprint == fingerprint(doc));
}

TEST_CASE("build_deployment requires its blocks") {
    auto doc = parse_config("[sim]\nevents = 10\n");
    CHECK_THROWS_AS(build_deployment(doc, "x"), ConfigError);
}

TEST_CASE("workload needs exactly one radio energy source") {
    auto doc = parse_config(kMinimalSim);
    apply_override(doc, "workload.tx_power_mw=193.63");
    CHECK_THROWS_AS(build_deployment(doc, "x"), ConfigError);  // both set
    auto none = parse_config(kMinimalSim);
    none.values.erase("workload.tx_energy_target_mj");
    CHECK_THROWS_AS(build_deployment(none, "x"), ConfigError);  // neither set
}

TEST_CASE("an explicit drivetrain ratio overrides the stages") {
    auto doc = parse_config(kMinimalSim);
    apply_override(doc, "drivetrain.ratio=30");
    const auto cfg = build_deployment(doc, "x");
    CHECK(cfg.gear_ratio == Approx(30.0));
}

TEST_CASE("build_sizing fits the generator from the anchor") {
    const auto doc = parse_config(R"(
[sizing]
transaction_energy_j = 0.061
harvest_window_s = 1.2
hinge_rpm_min = 17.85
hinge_rpm_max = 27.8
hinge_rpm_reference = 25.82
anchor_rpm = 1100
anchor_power_mw = 51
anchor_load_ohm = 470
r_internal_ohm = 10
margin_samples = 100
)");
    const auto run = build_sizing(doc);
    CHECK(run.spec.generator.ke_v_per_rpm == Approx(4.5455e-3).epsilon(1e-3));
    CHECK(run.margin_samples == 100);
    const auto result = sizing::size_system(run.spec);
    CHECK(result.capacitance_f == Approx(1000e-6));

    auto missing = parse_config("[sim]\nevents = 1\n");
    CHECK_THROWS_AS(build_sizing(missing), ConfigError);
}

TEST_CASE("the key registry backs every override") {
    for (const auto& spec : key_registry()) {
        CHECK(resolve_key(spec.key) == std::string(spec.key));
        CHECK(spec.key.find('.') != std::string_view::npos);
        CHECK_FALSE(spec.description.empty());
    }
}

TEST_CASE("reports serialize deterministically") {
    const auto doc = parse_config(kMinimalSim);
    const auto cfg = build_deployment(doc, "unit");
    const auto report = sim::simulate_deployment(cfg);
    const auto j = report::to_json(report, true);
    CHECK(j["config_fingerprint"] == fingerprint(doc));
    CHECK(j["seed"] == 7);
    CHECK(j["totals"]["events"] == 100);
    CHECK(j["per_event"].size() == 100);
    const auto rows = sim::summarize(report);
    const auto csv = report::summary_csv(rows);
    CHECK(csv.rfind("label,actuations,packets,success_pct\n", 0) == 0);
    CHECK(csv.find("unit,100,") != std::string::npos);
}
