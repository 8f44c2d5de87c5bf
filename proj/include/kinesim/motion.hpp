#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "kinesim/errors.hpp"
#include "kinesim/rng.hpp"

// Hinge actuation model: encoder-trace parsing, excursion segmentation,
// actuation statistics, and angular-velocity profiles used by the
// harvesting integrator.

namespace kinesim::motion {

// One encoder sample. limit_switch is true while the hinge rests at the
// fully closed position.
struct TraceRecord {
    std::int64_t timestamp_ms = 0;
    double angle_deg = 0.0;
    bool limit_switch = false;
};

// One open/close cycle. gap_to_next is the rest time between this event's
// closure and the start of the following excursion (zero for the last one).
struct ActuationEvent {
    double opening_angle_deg = 0.0;
    double opening_duration_s = 0.0;
    double closing_duration_s = 0.0;
    double gap_to_next_s = 0.0;
    bool partial = false;
};

enum class MotionPhase { opening, closing };
enum class ProfileShape { half_sine, trapezoid };

// Angular-velocity profile of one phase. The integral of angular velocity
// over the duration equals the swept angle.
struct MotionProfile {
    MotionPhase phase = MotionPhase::opening;
    ProfileShape shape = ProfileShape::half_sine;
    double angle_deg = 0.0;
    double duration_s = 0.0;
};

struct ActuationDistribution {
    double angle_mean_deg = 72.5;
    double angle_cv = 0.25;
    double open_duration_mean_s = 0.70;
    double open_duration_cv = 0.25;
    double close_duration_mean_s = 0.45;
    double close_duration_cv = 0.25;
    double partial_probability = 0.005;
    double partial_angle_min_deg = 5.0;
    double partial_angle_max_deg = 30.0;
    double inter_arrival_mean_s = 300.0;
};

inline constexpr double kFullTravelDeg = 110.0;   // physical lid travel cap
inline constexpr double kPartialPeakDeg = 30.0;   // below this, an excursion is partial

// --- parsing -------------------------------------------------------------

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

} // namespace detail

// Parses a trace in CSV form: header `timestamp_ms,angle_deg,limit_switch`,
// `#`-prefixed comment lines ignored. Timestamps must strictly increase.
inline std::vector<TraceRecord> parse_trace(std::string_view text) {
    std::vector<TraceRecord> records;
    std::size_t line_no = 0;
    bool header_seen = false;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view line = (eol == std::string_view::npos)
                                    ? text.substr(pos)
                                    : text.substr(pos, eol - pos);
        pos = (eol == std::string_view::npos) ? text.size() + 1 : eol + 1;
        ++line_no;
        line = detail::trim(line);
        if (line.empty() || line.front() == '#') continue;
        if (!header_seen) {
            if (line != "timestamp_ms,angle_deg,limit_switch")
                throw TraceFormatError(line_no, "expected header 'timestamp_ms,angle_deg,limit_switch'");
            header_seen = true;
            continue;
        }
        std::size_t c1 = line.find(',');
        std::size_t c2 = (c1 == std::string_view::npos) ? std::string_view::npos : line.find(',', c1 + 1);
        if (c2 == std::string_view::npos)
            throw TraceFormatError(line_no, "expected 3 comma-separated fields");
        TraceRecord rec;
        try {
            std::size_t used = 0;
            std::string ts(detail::trim(line.substr(0, c1)));
            rec.timestamp_ms = std::stoll(ts, &used);
            if (used != ts.size()) throw std::invalid_argument("trailing");
            std::string ang(detail::trim(line.substr(c1 + 1, c2 - c1 - 1)));
            rec.angle_deg = std::stod(ang, &used);
            if (used != ang.size()) throw std::invalid_argument("trailing");
            std::string sw(detail::trim(line.substr(c2 + 1)));
            if (sw == "0") rec.limit_switch = false;
            else if (sw == "1") rec.limit_switch = true;
            else throw std::invalid_argument("switch");
        } catch (const std::logic_error&) {
            throw TraceFormatError(line_no, "unparsable row '" + std::string(line) + "'");
        }
        if (rec.angle_deg < 0.0)
            throw TraceFormatError(line_no, "negative angle");
        if (!records.empty() && rec.timestamp_ms <= records.back().timestamp_ms)
            throw TraceOrderError(line_no, "timestamps must strictly increase");
        records.push_back(rec);
    }
    if (!header_seen)
        throw TraceFormatError(1, "empty trace: missing header");
    return records;
}

// --- segmentation --------------------------------------------------------

struct SegmentationResult {
    std::vector<ActuationEvent> events;
    // set when the trace ends inside an excursion; that excursion is dropped
    bool truncated_tail = false;
};

// Splits a time-ordered trace into actuation events. An excursion is
// detected when the angle exceeds open_threshold; its opening duration is
// measured from the moment the hinge leaves the closed rest position to the
// peak angle, and its closing duration from the peak to limit-switch
// closure. The threshold only gates event detection, so recovered timings
// are sample-accurate rather than offset by the threshold crossing.
inline SegmentationResult segment_actuations(const std::vector<TraceRecord>& records,
                                             double open_threshold_deg = 5.0) {
    if (open_threshold_deg <= 0.0)
        throw DomainError("open_threshold must be positive");
    SegmentationResult result;

    struct Pending {
        std::size_t start_idx = 0;  // last at-rest sample before motion
        std::size_t peak_idx = 0;
        double peak_angle = 0.0;
        bool above_threshold = false;
    };
    std::optional<Pending> cur;
    std::size_t last_rest = 0;  // most recent sample with the hinge at rest

    auto at_rest = [&](const TraceRecord& r) {
        return r.limit_switch || r.angle_deg <= 0.0;
    };

    std::vector<std::pair<ActuationEvent, std::int64_t>> closed;  // event + close timestamp
    std::vector<std::int64_t> start_times;

    for (std::size_t i = 0; i < records.size(); ++i) {
        const TraceRecord& r = records[i];
        if (!cur) {
            if (at_rest(r)) {
                last_rest = i;
            } else {
                cur = Pending{last_rest, i, r.angle_deg, r.angle_deg > open_threshold_deg};
            }
            continue;
        }
        if (r.angle_deg > cur->peak_angle) {
            cur->peak_angle = r.angle_deg;
            cur->peak_idx = i;
        }
        if (r.angle_deg > open_threshold_deg) cur->above_threshold = true;
        if (r.limit_switch) {
            if (cur->above_threshold) {
                ActuationEvent ev;
                ev.opening_angle_deg = cur->peak_angle;
                ev.opening_duration_s =
                    1e-3 * double(records[cur->peak_idx].timestamp_ms - records[cur->start_idx].timestamp_ms);
                ev.closing_duration_s =
                    1e-3 * double(r.timestamp_ms - records[cur->peak_idx].timestamp_ms);
                ev.partial = cur->peak_angle < kPartialPeakDeg;
                closed.emplace_back(ev, r.timestamp_ms);
                start_times.push_back(records[cur->start_idx].timestamp_ms);
            }
            cur.reset();
            last_rest = i;
        }
    }
    if (cur && cur->above_threshold) result.truncated_tail = true;

    for (std::size_t k = 0; k < closed.size(); ++k) {
        ActuationEvent ev = closed[k].first;
        if (k + 1 < closed.size())
            ev.gap_to_next_s = 1e-3 * double(start_times[k + 1] - closed[k].second);
        result.events.push_back(ev);
    }
    return result;
}

// --- kinematics ----------------------------------------------------------

inline double hinge_speed_rpm(double angle_deg, double duration_s) {
    if (angle_deg <= 0.0 || duration_s <= 0.0)
        throw DomainError("hinge_speed_rpm requires positive angle and duration");
    return (angle_deg / 360.0) / duration_s * 60.0;
}

inline MotionProfile angular_velocity_profile(const ActuationEvent& event, MotionPhase phase,
                                              ProfileShape shape = ProfileShape::half_sine) {
    MotionProfile p;
    p.phase = phase;
    p.shape = shape;
    p.angle_deg = event.opening_angle_deg;
    p.duration_s = (phase == MotionPhase::opening) ? event.opening_duration_s
                                                   : event.closing_duration_s;
    return p;
}

// Angular speed in deg/s at time t into the profile. Half-sine peaks at
// pi*angle/(2T); trapezoid ramps over the first and last 10% of the phase.
inline double angular_velocity_deg_s(const MotionProfile& p, double t) {
    if (t < 0.0 || t > p.duration_s) return 0.0;
    const double T = p.duration_s;
    if (T <= 0.0) return 0.0;
    switch (p.shape) {
    case ProfileShape::half_sine: {
        const double peak = std::numbers::pi * p.angle_deg / (2.0 * T);
        return peak * std::sin(std::numbers::pi * t / T);
    }
    case ProfileShape::trapezoid: {
        const double ramp = 0.1 * T;
        const double plateau = p.angle_deg / (0.9 * T);
        if (t < ramp) return plateau * t / ramp;
        if (t > T - ramp) return plateau * (T - t) / ramp;
        return plateau;
    }
    }
    return 0.0;
}

inline double peak_velocity_deg_s(const MotionProfile& p) {
    if (p.duration_s <= 0.0) return 0.0;
    if (p.shape == ProfileShape::half_sine)
        return std::numbers::pi * p.angle_deg / (2.0 * p.duration_s);
    return p.angle_deg / (0.9 * p.duration_s);
}

// --- statistics ----------------------------------------------------------

inline ActuationDistribution fit_distribution(const std::vector<ActuationEvent>& events) {
    std::vector<const ActuationEvent*> full;
    std::size_t partials = 0;
    for (const auto& e : events) {
        if (e.partial) ++partials;
        else full.push_back(&e);
    }
    if (full.size() < 10)
        throw InsufficientDataError("fit_distribution needs at least 10 non-partial events, got " +
                                    std::to_string(full.size()));

    auto moments = [&](auto&& get) {
        double mean = 0.0;
        for (const auto* e : full) mean += get(*e);
        mean /= double(full.size());
        double var = 0.0;
        for (const auto* e : full) {
            const double d = get(*e) - mean;
            var += d * d;
        }
        var = full.size() > 1 ? var / double(full.size() - 1) : 0.0;
        return std::pair<double, double>{mean, mean > 0.0 ? std::sqrt(var) / mean : 0.0};
    };

    ActuationDistribution d;
    auto [am, acv] = moments([](const ActuationEvent& e) { return e.opening_angle_deg; });
    auto [om, ocv] = moments([](const ActuationEvent& e) { return e.opening_duration_s; });
    auto [cm, ccv] = moments([](const ActuationEvent& e) { return e.closing_duration_s; });
    d.angle_mean_deg = am;
    d.angle_cv = acv;
    d.open_duration_mean_s = om;
    d.open_duration_cv = ocv;
    d.close_duration_mean_s = cm;
    d.close_duration_cv = ccv;
    d.partial_probability = double(partials) / double(events.size());

    double pmin = d.partial_angle_min_deg, pmax = d.partial_angle_max_deg;
    bool first = true;
    for (const auto& e : events) {
        if (!e.partial) continue;
        if (first) { pmin = pmax = e.opening_angle_deg; first = false; }
        pmin = std::min(pmin, e.opening_angle_deg);
        pmax = std::max(pmax, e.opening_angle_deg);
    }
    d.partial_angle_min_deg = pmin;
    d.partial_angle_max_deg = pmax;

    double gap_sum = 0.0;
    std::size_t gap_n = 0;
    for (std::size_t i = 0; i + 1 < events.size(); ++i) {
        gap_sum += events[i].gap_to_next_s;
        ++gap_n;
    }
    if (gap_n > 0) d.inter_arrival_mean_s = gap_sum / double(gap_n);
    return d;
}

namespace detail {

// Lognormal parametrized by arithmetic mean and coefficient of variation.
inline double sample_lognormal(double mean, double cv, RngEngine& rng) {
    if (cv <= 0.0) return mean;
    const double sigma2 = std::log(1.0 + cv * cv);
    const double mu = std::log(mean) - 0.5 * sigma2;
    std::lognormal_distribution<double> dist(mu, std::sqrt(sigma2));
    return dist(rng);
}

// Normal truncated to (lo, hi] by rejection.
inline double sample_truncated_normal(double mean, double sd, double lo, double hi, RngEngine& rng) {
    if (sd <= 0.0) return std::clamp(mean, std::nextafter(lo, hi), hi);
    std::normal_distribution<double> dist(mean, sd);
    for (int i = 0; i < 10000; ++i) {
        const double x = dist(rng);
        if (x > lo && x <= hi) return x;
    }
    return std::clamp(mean, std::nextafter(lo, hi), hi);
}

} // namespace detail

// Draws one actuation. Deterministic given the engine state; draw order is
// fixed (partial flag, angle, durations, gap) so streams stay reproducible.
inline ActuationEvent sample_actuation(const ActuationDistribution& dist, RngEngine& rng) {
    ActuationEvent ev;
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const bool partial = uni(rng) < dist.partial_probability;
    if (partial) {
        std::uniform_real_distribution<double> pang(dist.partial_angle_min_deg,
                                                    dist.partial_angle_max_deg);
        ev.opening_angle_deg = pang(rng);
        ev.partial = true;
    } else {
        ev.opening_angle_deg = detail::sample_truncated_normal(
            dist.angle_mean_deg, dist.angle_cv * dist.angle_mean_deg, 0.0, kFullTravelDeg, rng);
    }
    ev.opening_duration_s = detail::sample_lognormal(dist.open_duration_mean_s, dist.open_duration_cv, rng);
    ev.closing_duration_s = detail::sample_lognormal(dist.close_duration_mean_s, dist.close_duration_cv, rng);
    if (dist.inter_arrival_mean_s > 0.0) {
        std::exponential_distribution<double> gap(1.0 / dist.inter_arrival_mean_s);
        ev.gap_to_next_s = gap(rng);
    }
    return ev;
}

} // namespace kinesim::motion
