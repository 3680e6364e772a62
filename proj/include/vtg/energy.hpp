#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "vtg/dynamics.hpp"
#include "vtg/errors.hpp"

namespace vtg {

struct EnergyBreakdown {
    double servo = 0;  // J
    double fuse = 0;   // J
    double aux = 0;    // J
    double total = 0;  // J
};

struct EmissionFactors {
    double f_e = 0.581;      // kg CO2 per kWh of consumed energy
    double f_m = 1.9;        // kg CO2 per kg of material
    double m_mater = 0.0;    // kg of material consumed

    void validate() const {
        if (f_e < 0 || f_m < 0 || m_mater < 0)
            throw DomainError("emission factors must be non-negative");
    }
};

/// Motoring work delivered by the recorded actuator forces: the 6-coordinate
/// instantaneous power F . q' is clamped at zero (regeneration discarded) and
/// integrated by the trapezoidal rule.
inline double servo_energy(const StateTrajectory& tr) {
    if (tr.steps() < 2) return 0.0;
    double e = 0.0;
    double prev = std::max(0.0, tr.force[0].dot(tr.qd[0]));
    for (std::size_t k = 1; k < tr.steps(); ++k) {
        const double cur = std::max(0.0, tr.force[k].dot(tr.qd[k]));
        e += 0.5 * (prev + cur) * tr.dt;
        prev = cur;
    }
    return e;
}

/// Sum over independent axis runs.
inline double servo_energy(std::span<const StateTrajectory> axes) {
    double e = 0.0;
    for (const auto& tr : axes) e += servo_energy(tr);
    return e;
}

inline EnergyBreakdown total_energy(double e_servo, double e_fuse, double e_aux) {
    if (e_servo < 0 || e_fuse < 0 || e_aux < 0)
        throw DomainError("energy components must be non-negative");
    return EnergyBreakdown{e_servo, e_fuse, e_aux, e_servo + e_fuse + e_aux};
}

/// m_CO2 = f_e * E[kWh] + f_m * m_mater. Energy arrives in joules and is
/// converted to kWh (/3.6e6) because the electrical factor is per kWh.
inline double carbon_emission(double energy_joules, const EmissionFactors& f) {
    f.validate();
    if (energy_joules < 0) throw DomainError("energy must be non-negative");
    return f.f_e * (energy_joules / 3.6e6) + f.f_m * f.m_mater;
}

}  // namespace vtg
