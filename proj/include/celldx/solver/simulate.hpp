#pragma once

// Constant-current discharge of the particle + electrolyte model down to the
// lower voltage cutoff. The last step is bisected so the recorded end point
// sits on the cutoff.

#include <cmath>
#include <vector>

#include "celldx/electrochem.hpp"
#include "celldx/ocp.hpp"
#include "celldx/params.hpp"
#include "celldx/solver/electrolyte.hpp"
#include "celldx/solver/solid.hpp"

namespace celldx {

struct SolverOptions {
    double dt = 1.0;       // s
    int n_r = 30;          // shells per particle
    int n_x = 20;          // cells per electrolyte region
    double t_max = 7200.0; // s, runaway guard
    double current = 4.4;  // A, discharge positive
};

struct DischargePoint {
    double t, v, css_neg, css_pos, ce_neg0, ce_posL;
};

struct DischargeCurve {
    std::vector<DischargePoint> points;  // one per accepted step, t = 0 first
    double t_end = 0.0;
    double capacity_ah = 0.0;
    bool hit_cutoff = false;
    bool saturated = false;
    bool ok() const { return hit_cutoff && !saturated; }
};

inline DischargeCurve simulate_discharge(const AgingParams& theta, const CellParams& p,
                                         const OcpCurve& ocp_neg, const OcpCurve& ocp_pos,
                                         const SolverOptions& opt = {}) {
    double I = opt.current;
    double as_n = specific_interfacial_area(theta.eps_s_neg, p.neg.particle_radius);
    double as_p = specific_interfacial_area(theta.eps_s_pos, p.pos.particle_radius);
    double j_n = volumetric_current_density(I, p.area, p.neg.thickness, Electrode::Negative);
    double j_p = volumetric_current_density(I, p.area, p.pos.thickness, Electrode::Positive);
    // molar flux into each particle surface
    double q_n = -j_n / (as_n * kFaraday);
    double q_p = -j_p / (as_p * kFaraday);

    SolidParticle neg(p.neg.particle_radius, p.neg.d_s, opt.n_r,
                      theta.x100_neg * p.neg.c_s_max);
    SolidParticle pos(p.pos.particle_radius, p.pos.d_s, opt.n_r,
                      theta.x100_pos * p.pos.c_s_max);
    ElectrolyteGrid lyte(p, opt.n_x, p.c_e0);

    DischargeCurve out;
    auto record = [&](double t) -> VoltageResult {
        double cn = neg.surface_conc(q_n);
        double cp = pos.surface_conc(q_p);
        auto vr = terminal_voltage(cn, cp, lyte.boundary_neg(), lyte.boundary_pos(),
                                   theta, p, ocp_neg, ocp_pos, I);
        out.points.push_back({t, vr.v, cn, cp, lyte.boundary_neg(), lyte.boundary_pos()});
        out.saturated |= vr.clamped;
        return vr;
    };

    auto v0 = record(0.0);
    if (!std::isfinite(v0.v)) return out;
    if (v0.v <= p.v_min) {  // already below cutoff under load
        out.t_end = 0.0;
        out.hit_cutoff = true;
        return out;
    }

    double t = 0.0;
    while (t < opt.t_max) {
        SolidParticle neg_prev = neg, pos_prev = pos;
        ElectrolyteGrid lyte_prev = lyte;

        neg.step(opt.dt, q_n);
        pos.step(opt.dt, q_p);
        lyte.step(opt.dt, I);
        t += opt.dt;

        double cn = neg.surface_conc(q_n);
        double cp = pos.surface_conc(q_p);
        auto vr = terminal_voltage(cn, cp, lyte.boundary_neg(), lyte.boundary_pos(),
                                   theta, p, ocp_neg, ocp_pos, I);
        if (!std::isfinite(vr.v)) {
            out.saturated = true;
            break;
        }
        if (vr.v <= p.v_min) {
            // walk the crossing down inside this step
            double lo = 0.0, hi = opt.dt;
            for (int it = 0; it < 50 && (hi - lo) > 1e-9; ++it) {
                double mid = 0.5 * (lo + hi);
                SolidParticle n2 = neg_prev, p2 = pos_prev;
                ElectrolyteGrid l2 = lyte_prev;
                n2.step(mid, q_n);
                p2.step(mid, q_p);
                l2.step(mid, I);
                auto vm = terminal_voltage(n2.surface_conc(q_n), p2.surface_conc(q_p),
                                           l2.boundary_neg(), l2.boundary_pos(), theta,
                                           p, ocp_neg, ocp_pos, I);
                if (vm.v <= p.v_min)
                    hi = mid;
                else
                    lo = mid;
            }
            neg = neg_prev;
            pos = pos_prev;
            lyte = lyte_prev;
            neg.step(hi, q_n);
            pos.step(hi, q_p);
            lyte.step(hi, I);
            t = t - opt.dt + hi;
            record(t);
            out.hit_cutoff = true;
            break;
        }
        record(t);
    }
    out.t_end = t;
    out.capacity_ah = I * out.t_end / 3600.0;
    return out;
}

// Linear resampling onto k points uniform in time over [0, t_end].
inline std::vector<DischargePoint> resample_uniform(const DischargeCurve& c, int k) {
    std::vector<DischargePoint> out;
    if (c.points.size() < 2 || k < 2) return out;
    out.reserve(k);
    std::size_t seg = 0;
    for (int i = 0; i < k; ++i) {
        double t = c.t_end * i / (k - 1);
        while (seg + 2 < c.points.size() && c.points[seg + 1].t < t) ++seg;
        const DischargePoint &a = c.points[seg], &b = c.points[seg + 1];
        double w = (b.t > a.t) ? (t - a.t) / (b.t - a.t) : 0.0;
        auto mix = [&](double x, double y) { return x + w * (y - x); };
        out.push_back({t, mix(a.v, b.v), mix(a.css_neg, b.css_neg),
                       mix(a.css_pos, b.css_pos), mix(a.ce_neg0, b.ce_neg0),
                       mix(a.ce_posL, b.ce_posL)});
    }
    return out;
}

} // namespace celldx
