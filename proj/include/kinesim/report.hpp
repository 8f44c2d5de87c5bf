#pragma once

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kinesim/errors.hpp"
#include "kinesim/sim.hpp"
#include "kinesim/sizing.hpp"

// Machine (JSON/CSV) and human (aligned table) report forms. Reports carry
// no wall-clock fields, so a fixed seed and config reproduce them byte for
// byte.

namespace kinesim::report {

inline nlohmann::json to_json(const sim::DeploymentReport& r, bool include_per_event = false) {
    nlohmann::json j;
    j["label"] = r.label;
    j["config_fingerprint"] = r.config_fingerprint;
    j["seed"] = r.seed;
    j["totals"] = {{"events", r.event_count},
                   {"delivered_events", r.delivered_events},
                   {"packets_produced", r.packets_produced},
                   {"packets_delivered", r.packets_delivered}};
    j["outcome_counts"] = {{"single_packet", r.counts.single_packet},
                           {"double_packet", r.counts.double_packet},
                           {"no_charge", r.counts.no_charge},
                           {"channel_loss", r.counts.channel_loss}};
    j["success_rate"] = r.success_rate;
    if (include_per_event) {
        nlohmann::json events = nlohmann::json::array();
        for (const auto& rec : r.per_event) {
            events.push_back({{"angle_deg", rec.event.opening_angle_deg},
                              {"opening_s", rec.event.opening_duration_s},
                              {"closing_s", rec.event.closing_duration_s},
                              {"gap_s", rec.event.gap_to_next_s},
                              {"partial", rec.event.partial},
                              {"peak_voltage", rec.peak_voltage_v},
                              {"outcome", sim::to_string(rec.outcome)}});
        }
        j["per_event"] = std::move(events);
    }
    return j;
}

inline std::string summary_csv(const std::vector<sim::SummaryRow>& rows) {
    std::ostringstream out;
    out << "label,actuations,packets,success_pct\n";
    out << std::fixed << std::setprecision(1);
    for (const auto& row : rows)
        out << row.label << ',' << row.actuations << ',' << row.packets << ',' << row.success_pct
            << '\n';
    return out.str();
}

inline std::string summary_table(const std::vector<sim::SummaryRow>& rows) {
    std::size_t width = 8;
    for (const auto& row : rows) width = std::max(width, row.label.size());
    std::ostringstream out;
    out << std::left << std::setw(int(width)) << "label" << std::right << std::setw(12)
        << "actuations" << std::setw(10) << "packets" << std::setw(10) << "success" << '\n';
    out << std::fixed << std::setprecision(1);
    for (const auto& row : rows)
        out << std::left << std::setw(int(width)) << row.label << std::right << std::setw(12)
            << row.actuations << std::setw(10) << row.packets << std::setw(9) << row.success_pct
            << "%\n";
    return out.str();
}

inline std::string outcome_table(const sim::DeploymentReport& r) {
    const double n = double(r.event_count);
    std::ostringstream out;
    out << std::fixed << std::setprecision(2);
    auto line = [&](const char* name, std::size_t count) {
        out << "  " << std::left << std::setw(14) << name << std::right << std::setw(8) << count
            << std::setw(9) << (n > 0 ? 100.0 * double(count) / n : 0.0) << "%\n";
    };
    line("single_packet", r.counts.single_packet);
    line("double_packet", r.counts.double_packet);
    line("no_charge", r.counts.no_charge);
    line("channel_loss", r.counts.channel_loss);
    return out.str();
}

inline nlohmann::json to_json(const sizing::SizingResult& r) {
    return {{"required_power_w", r.required_power_w},
            {"target_generator_rpm", r.target_generator_rpm},
            {"gear_ratio", r.gear_ratio},
            {"capacitance_f", r.capacitance_f},
            {"wake_threshold_v", r.wake_threshold_v},
            {"rpm_band_at_generator", {r.rpm_band_min, r.rpm_band_max}},
            {"margin_fraction", r.margin_fraction}};
}

inline std::string sizing_table(const sizing::SizingResult& r) {
    std::ostringstream out;
    out << std::fixed;
    out << "  required power      " << std::setprecision(1) << 1e3 * r.required_power_w << " mW\n";
    out << "  target generator    " << std::setprecision(0) << r.target_generator_rpm << " rpm\n";
    out << "  gear ratio          1:" << std::setprecision(2) << r.gear_ratio << '\n';
    out << "  capacitance         " << std::setprecision(0) << 1e6 * r.capacitance_f << " uF\n";
    out << "  wake threshold      " << std::setprecision(2) << r.wake_threshold_v << " V\n";
    out << "  generator rpm band  " << std::setprecision(0) << r.rpm_band_min << " - "
        << r.rpm_band_max << " rpm\n";
    out << "  margin fraction     " << std::setprecision(3) << r.margin_fraction << '\n';
    return out.str();
}

inline void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << contents;
    if (!out) throw IoError("write failed for '" + path + "'");
}

} // namespace kinesim::report
