#pragma once

// Lumped single-state residual operators for the solid surface concentration
// and the electrode-average electrolyte concentration. These are the training
// constraints applied to the surrogate outputs; they are NOT used by the
// reference solver. Both are linear in the state, so callers that need them
// inside an autodiff graph can read off the scalar coefficients.

#include <stdexcept>

#include "celldx/electrochem.hpp"
#include "celldx/params.hpp"

namespace celldx {

// d(css)/dt is forced by the reaction flux alone: 3 j / (F R_s a_s), which
// collapses to j / (F eps_s).
inline double solid_rate_forcing(double current, const CellParams& p, Electrode side) {
    const ElectrodeParams& e = p.el(side);
    double j = volumetric_current_density(current, p.area, e.thickness, side);
    double a_s = specific_interfacial_area(e.eps_s, e.particle_radius);
    return 3.0 * j / (kFaraday * e.particle_radius * a_s);
}

inline double residual_solid(double css_dot, double current, const CellParams& p,
                             Electrode side) {
    return css_dot - solid_rate_forcing(current, p, side);
}

// First-order electrolyte balance d(ce)/dt = (alpha I - gamma ce) / beta.
// Geometry enters through K = L_neg +/- 2 L_sep - L_pos (sign follows the
// electrode).
struct LiquidCoefficients {
    double k = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;

    static LiquidCoefficients for_side(const CellParams& p, Electrode side) {
        const ElectrodeParams& e = p.el(side);
        double sgn = (side == Electrode::Positive) ? 1.0 : -1.0;
        double l = e.thickness;
        LiquidCoefficients c;
        c.k = p.neg.thickness + sgn * 2.0 * p.sep_thickness - p.pos.thickness;
        double span = c.k + sgn * 2.0 * l;
        c.alpha = sgn * 3.0 * (1.0 - p.t_plus) * span * span / (kFaraday * p.area);
        c.beta = l * e.eps_e * (3.0 * c.k * c.k + 10.0 * c.k * l + sgn * 10.0 * l * l);
        c.gamma = (12.0 * c.k + 24.0 * l) * effective_diffusivity(p.d_e, e.eps_e, p.brug);
        if (c.beta == 0.0) throw std::domain_error("degenerate liquid beta");
        return c;
    }

    // residual expressed as ce_dot + rate*ce - drive*I
    double drive() const { return alpha / beta; }
    double rate() const { return gamma / beta; }
};

inline double residual_liquid(double ce_dot, double ce, double current,
                              const LiquidCoefficients& c) {
    return ce_dot - (c.alpha * current - c.gamma * ce) / c.beta;
}

} // namespace celldx
