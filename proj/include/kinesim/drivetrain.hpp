#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "kinesim/errors.hpp"

// Spur-gear train and permanent-magnet DC generator model. The train is
// listed hinge side first, so a ratio above one amplifies speed.

namespace kinesim::drivetrain {

struct GearStage {
    int input_teeth = 0;
    int output_teeth = 0;
};

struct GearTrain {
    std::vector<GearStage> stages;
};

struct GeneratorModel {
    double ke_v_per_rpm = 0.0;   // back-EMF constant
    double r_internal_ohm = 0.0;
    double rated_voltage_v = 0.0;
};

inline void validate(const GearTrain& train) {
    if (train.stages.empty())
        throw ConfigError("gear train needs at least one stage");
    for (const auto& s : train.stages)
        if (s.input_teeth < 8 || s.output_teeth < 8)
            throw ConfigError("tooth counts below 8 are not supported");
}

inline double train_ratio(const GearTrain& train) {
    validate(train);
    // exact integer products keep the ratio multiplicative under concatenation
    std::int64_t num = 1, den = 1;
    for (const auto& s : train.stages) {
        num *= s.input_teeth;
        den *= s.output_teeth;
    }
    return double(num) / double(den);
}

inline double generator_rpm(double hinge_rpm, double ratio) {
    if (hinge_rpm < 0.0) throw DomainError("hinge rpm must be nonnegative");
    return hinge_rpm * ratio;
}

inline double back_emf(const GeneratorModel& gen, double rpm) {
    return gen.ke_v_per_rpm * rpm;
}

// Electrical power delivered into a resistive load at the given shaft speed.
inline double power_into_load(const GeneratorModel& gen, double rpm, double load_ohm) {
    if (rpm < 0.0) throw DomainError("rpm must be nonnegative");
    if (load_ohm <= 0.0) throw DomainError("load must be positive");
    const double emf = back_emf(gen, rpm);
    const double denom = load_ohm + gen.r_internal_ohm;
    return emf * emf * load_ohm / (denom * denom);
}

struct PowerAnchor {
    double rpm = 0.0;
    double power_w = 0.0;
    double load_ohm = 0.0;
};

// Least-squares fit of ke to measured (rpm, power, load) anchors with an
// assumed internal resistance. Power is linear in ke^2, so the fit is
// closed-form.
inline GeneratorModel fit_generator(const std::vector<PowerAnchor>& anchors,
                                    double r_internal_ohm,
                                    double rated_voltage_v = 0.0) {
    if (anchors.empty())
        throw InsufficientDataError("fit_generator needs at least one anchor");
    double num = 0.0, den = 0.0;
    for (const auto& a : anchors) {
        const double d = a.load_ohm + r_internal_ohm;
        const double x = a.rpm * a.rpm * a.load_ohm / (d * d);
        num += a.power_w * x;
        den += x * x;
    }
    GeneratorModel gen;
    gen.ke_v_per_rpm = std::sqrt(num / den);
    gen.r_internal_ohm = r_internal_ohm;
    gen.rated_voltage_v = rated_voltage_v;
    return gen;
}

// Current pushed into the buffer capacitor through a full-bridge rectifier.
// The rectifier blocks once the EMF drops below the capacitor voltage plus
// the diode drops.
inline double charging_current(const GeneratorModel& gen, double rpm, double v_cap,
                               double rectifier_drop_v) {
    if (v_cap < 0.0) throw DomainError("capacitor voltage must be nonnegative");
    const double drive = back_emf(gen, rpm) - rectifier_drop_v - v_cap;
    return drive > 0.0 ? drive / gen.r_internal_ohm : 0.0;
}

} // namespace kinesim::drivetrain
