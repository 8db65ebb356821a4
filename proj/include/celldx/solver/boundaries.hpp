#pragma once

// Close the stoichiometric window from its two sampled corners: the charged
// positive stoichiometry comes from the full-charge rest voltage, the
// discharged negative stoichiometry from the empty rest voltage. Each is a
// bounded scalar inversion of one half-cell curve.

#include "celldx/ocp.hpp"
#include "celldx/params.hpp"

namespace celldx {

struct BoundaryResult {
    double x0_neg = 0.0;
    double x100_pos = 0.0;
    bool ok = false;
};

inline BoundaryResult derive_boundary_stoichiometry(double x100_neg, double x0_pos,
                                                    const CellParams& p,
                                                    const OcpCurve& ocp_neg,
                                                    const OcpCurve& ocp_pos) {
    BoundaryResult r;
    auto top = ocp_pos.invert(p.v_max + ocp_neg(x100_neg));
    auto bottom = ocp_neg.invert(ocp_pos(x0_pos) - p.v_min);
    if (!top.found || !bottom.found) return r;
    r.x100_pos = top.x;
    r.x0_neg = bottom.x;
    r.ok = true;
    return r;
}

// Fill the two derived members of a sampled parameter vector.
inline bool close_window(AgingParams& t, const CellParams& p, const OcpCurve& ocp_neg,
                         const OcpCurve& ocp_pos) {
    auto r = derive_boundary_stoichiometry(t.x100_neg, t.x0_pos, p, ocp_neg, ocp_pos);
    if (!r.ok) return false;
    t.x0_neg = r.x0_neg;
    t.x100_pos = r.x100_pos;
    return true;
}

} // namespace celldx
