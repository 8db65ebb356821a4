#pragma once

#include <cmath>
#include <stdexcept>

#include "celldx/constants.hpp"
#include "celldx/ocp.hpp"
#include "celldx/params.hpp"

namespace celldx {

// Interfacial area per unit electrode volume, 3 eps_s / R_s.
inline double specific_interfacial_area(double eps_s, double particle_radius) {
    if (!(particle_radius > 0.0))
        throw std::invalid_argument("specific_interfacial_area: radius must be positive");
    return 3.0 * eps_s / particle_radius;
}

// Volumetric reaction current density. Discharge current is positive; the
// negative electrode takes +I/(A L), the positive -I/(A L).
inline double volumetric_current_density(double current, double area, double thickness,
                                         Electrode side) {
    double j = current / (area * thickness);
    return side == Electrode::Negative ? j : -j;
}

// Exchange current density F k0 sqrt(c_e (c_s_max - c_ss) c_ss).
inline double exchange_current_density(double k0, double c_e, double c_ss, double c_s_max) {
    if (!(c_e > 0.0) || !(c_ss > 0.0) || !(c_ss < c_s_max))
        throw std::domain_error("exchange_current_density: concentrations out of range");
    return kFaraday * k0 * std::sqrt(c_e * (c_s_max - c_ss) * c_ss);
}

// Butler-Volmer overpotential with symmetric transfer coefficients.
inline double overpotential(double j, double a_s, double i0, double temperature) {
    return 2.0 * kGasConst * temperature / kFaraday * std::asinh(j / (2.0 * a_s * i0));
}

inline double effective_conductivity(double kappa, double eps_e, double brug) {
    return kappa * std::pow(eps_e, brug);
}

inline double effective_diffusivity(double d_e, double eps_e, double brug) {
    return d_e * std::pow(eps_e, brug);
}

// Lumped ohmic resistance of the electrolyte path, ohm*m^2 (multiply by I/A).
inline double electrolyte_resistance_term(const CellParams& p) {
    double k_neg = effective_conductivity(p.kappa, p.neg.eps_e, p.brug);
    double k_sep = effective_conductivity(p.kappa, p.sep_eps_e, p.brug);
    double k_pos = effective_conductivity(p.kappa, p.pos.eps_e, p.brug);
    return p.pos.thickness / (2.0 * k_pos) + p.sep_thickness / k_sep +
           p.neg.thickness / (2.0 * k_neg);
}

// Ohmic drop plus concentration overpotential across the electrolyte.
// ce_pos_l and ce_neg_0 are the boundary concentrations at the positive and
// negative current collectors.
inline double electrolyte_potential_drop(double current, double ce_pos_l, double ce_neg_0,
                                         const CellParams& p) {
    if (!(ce_pos_l > 0.0) || !(ce_neg_0 > 0.0))
        throw std::domain_error("electrolyte_potential_drop: boundary concentrations must be positive");
    double ohmic = -electrolyte_resistance_term(p) * current / p.area;
    double conc = 2.0 * kGasConst * p.temperature * (1.0 - p.t_plus) / kFaraday *
                  std::log(ce_pos_l / ce_neg_0);
    return ohmic + conc;
}

// Electrode capacity A L eps_s c_s_max F, reported in Ah.
inline double theoretical_capacity(double area, double thickness, double eps_s,
                                   double c_s_max) {
    return area * thickness * eps_s * c_s_max * kFaraday / 3600.0;
}

// Usable capacity from the stoichiometric windows; the smaller electrode
// window limits the cell.
inline double cell_capacity(const AgingParams& t, const CellParams& p) {
    double qn = std::abs(t.x100_neg - t.x0_neg) *
                theoretical_capacity(p.area, p.neg.thickness, t.eps_s_neg, p.neg.c_s_max);
    double qp = std::abs(t.x0_pos - t.x100_pos) *
                theoretical_capacity(p.area, p.pos.thickness, t.eps_s_pos, p.pos.c_s_max);
    return std::min(qn, qp);
}

// Surface saturation guard: concentrations are clamped a small margin inside
// (0, c_s_max); gradients are treated as zero through the clamp.
inline constexpr double kSatMarginFrac = 1e-3;

inline double clamp_surface_conc(double c_ss, double c_s_max, bool* clamped = nullptr) {
    double delta = kSatMarginFrac * c_s_max;
    if (c_ss < delta) {
        if (clamped) *clamped = true;
        return delta;
    }
    if (c_ss > c_s_max - delta) {
        if (clamped) *clamped = true;
        return c_s_max - delta;
    }
    return c_ss;
}

struct VoltageResult {
    double v;
    bool clamped;  // a surface concentration hit the saturation guard
};

// Terminal voltage: OCP difference, Butler-Volmer overpotentials and the
// electrolyte drop. Surface stoichiometry hitting the saturation guard is
// flagged, not fatal.
inline VoltageResult terminal_voltage(double css_neg, double css_pos, double ce_neg_0,
                                      double ce_pos_l, const AgingParams& theta,
                                      const CellParams& p, const OcpCurve& ocp_neg,
                                      const OcpCurve& ocp_pos, double current) {
    bool clamped = false;
    double cn = clamp_surface_conc(css_neg, p.neg.c_s_max, &clamped);
    double cp = clamp_surface_conc(css_pos, p.pos.c_s_max, &clamped);

    double as_n = specific_interfacial_area(theta.eps_s_neg, p.neg.particle_radius);
    double as_p = specific_interfacial_area(theta.eps_s_pos, p.pos.particle_radius);
    double j_n = volumetric_current_density(current, p.area, p.neg.thickness, Electrode::Negative);
    double j_p = volumetric_current_density(current, p.area, p.pos.thickness, Electrode::Positive);
    double i0_n = exchange_current_density(p.neg.k0, ce_neg_0, cn, p.neg.c_s_max);
    double i0_p = exchange_current_density(p.pos.k0, ce_pos_l, cp, p.pos.c_s_max);
    double eta_n = overpotential(j_n, as_n, i0_n, p.temperature);
    double eta_p = overpotential(j_p, as_p, i0_p, p.temperature);

    double u_n = ocp_neg(cn / p.neg.c_s_max);
    double u_p = ocp_pos(cp / p.pos.c_s_max);
    double drop = electrolyte_potential_drop(current, ce_pos_l, ce_neg_0, p);

    return {u_p - u_n + eta_p - eta_n + drop, clamped};
}

} // namespace celldx
