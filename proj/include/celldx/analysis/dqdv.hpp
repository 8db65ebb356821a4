#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "celldx/io/csv.hpp"
#include "celldx/solver/simulate.hpp"

namespace celldx {

struct DqdvPoint {
    double v;     // bin center, V
    double dq_dv; // charge accrued per volt, Ah/V (positive on discharge)
};

// Incremental-capacity curve from a constant-current record. Charge between
// consecutive samples is coulomb-counted and spread over the voltage bins the
// segment crosses, so the integral over bins telescopes back to the total
// capacity no matter the bin width. Bins sit on an absolute grid (k * width)
// so curves from different runs share centers.
inline std::vector<DqdvPoint> dqdv_curve(const DischargeCurve& rec, double current_a,
                                         double bin_width = 0.010) {
    if (rec.points.size() < 2) throw SchemaError("dq/dv needs at least two samples");
    if (!(bin_width > 0.0)) throw SchemaError("dq/dv bin width must be positive");

    double v_lo = rec.points.front().v, v_hi = v_lo;
    for (const auto& q : rec.points) {
        v_lo = std::min(v_lo, q.v);
        v_hi = std::max(v_hi, q.v);
    }
    int k_lo = static_cast<int>(std::floor(v_lo / bin_width));
    int k_hi = static_cast<int>(std::floor(v_hi / bin_width));
    int n_bins = k_hi - k_lo + 1;
    if (n_bins < 3)
        throw SchemaError("dq/dv input spans fewer than 3 voltage bins (" +
                          std::to_string(n_bins) + " at " + format_double(bin_width) +
                          " V)");

    std::vector<double> acc(static_cast<size_t>(n_bins), 0.0);
    for (size_t i = 1; i < rec.points.size(); ++i) {
        const auto& a = rec.points[i - 1];
        const auto& b = rec.points[i];
        double dq = current_a * (b.t - a.t) / 3600.0;
        double lo = std::min(a.v, b.v), hi = std::max(a.v, b.v);
        if (hi - lo < 1e-12) {
            int k = static_cast<int>(std::floor(0.5 * (lo + hi) / bin_width));
            acc[static_cast<size_t>(std::clamp(k - k_lo, 0, n_bins - 1))] += dq;
            continue;
        }
        int ka = static_cast<int>(std::floor(lo / bin_width));
        int kb = static_cast<int>(std::floor(hi / bin_width));
        for (int k = ka; k <= kb; ++k) {
            double edge_lo = k * bin_width, edge_hi = edge_lo + bin_width;
            double overlap = std::min(hi, edge_hi) - std::max(lo, edge_lo);
            if (overlap <= 0.0) continue;
            acc[static_cast<size_t>(std::clamp(k - k_lo, 0, n_bins - 1))] +=
                dq * overlap / (hi - lo);
        }
    }

    std::vector<DqdvPoint> out;
    out.reserve(acc.size());
    for (int k = 0; k < n_bins; ++k)
        out.push_back({(k_lo + k + 0.5) * bin_width, acc[static_cast<size_t>(k)] / bin_width});
    return out;
}

inline double dqdv_integral(const std::vector<DqdvPoint>& curve, double bin_width) {
    double q = 0.0;
    for (const auto& p : curve) q += p.dq_dv * bin_width;
    return q;
}

enum class DegradationCase { Fresh, LamNe, LamPe, Lli };

inline const char* case_label(DegradationCase c) {
    switch (c) {
        case DegradationCase::Fresh: return "fresh";
        case DegradationCase::LamNe: return "lam_ne";
        case DegradationCase::LamPe: return "lam_pe";
        case DegradationCase::Lli: return "lli";
    }
    return "?";
}

// Single-mechanism 10% perturbations. Loss of active material scales the
// volume fraction of one electrode; loss of lithium inventory lowers the
// negative top-of-charge stoichiometry and rebalances the positive one so
// both electrodes agree on how much cyclable lithium disappeared.
inline AgingParams apply_case(const AgingParams& base, DegradationCase c,
                              const CellParams& p, double perturbation = 0.10) {
    AgingParams th = base;
    switch (c) {
        case DegradationCase::Fresh: break;
        case DegradationCase::LamNe: th.eps_s_neg *= 1.0 - perturbation; break;
        case DegradationCase::LamPe: th.eps_s_pos *= 1.0 - perturbation; break;
        case DegradationCase::Lli: {
            double shed = perturbation * base.x100_neg;
            th.x100_neg = base.x100_neg - shed;
            th.x100_pos = base.x100_pos +
                          shed * (base.eps_s_neg * p.neg.thickness * p.neg.c_s_max) /
                              (base.eps_s_pos * p.pos.thickness * p.pos.c_s_max);
            break;
        }
    }
    return th;
}

struct SensitivityCase {
    DegradationCase kind;
    AgingParams theta;
    DischargeCurve curve;
    std::vector<DqdvPoint> dqdv;
};

inline std::vector<SensitivityCase> run_sensitivity(const AgingParams& base,
                                                    const CellParams& p,
                                                    const OcpCurve& ocp_neg,
                                                    const OcpCurve& ocp_pos,
                                                    SolverOptions opt = {},
                                                    double bin_width = 0.010,
                                                    double perturbation = 0.10) {
    std::vector<SensitivityCase> out;
    for (auto kind : {DegradationCase::Fresh, DegradationCase::LamNe,
                      DegradationCase::LamPe, DegradationCase::Lli}) {
        SensitivityCase sc;
        sc.kind = kind;
        sc.theta = apply_case(base, kind, p, perturbation);
        sc.curve = simulate_discharge(sc.theta, p, ocp_neg, ocp_pos, opt);
        if (!sc.curve.ok())
            throw std::runtime_error(std::string("sensitivity case '") + case_label(kind) +
                                     "' did not reach the cutoff voltage");
        sc.dqdv = dqdv_curve(sc.curve, opt.current, bin_width);
        out.push_back(std::move(sc));
    }
    return out;
}

inline void write_dqdv_csv(const std::string& path, const std::vector<SensitivityCase>& cases) {
    CsvWriter w(path, "v_volts,dq_dv_ah_per_v,case_label");
    for (const auto& sc : cases)
        for (const auto& p : sc.dqdv)
            w.raw(format_double(p.v) + "," + format_double(p.dq_dv) + "," +
                  case_label(sc.kind));
}

inline void write_sensitivity_series_csv(const std::string& path,
                                         const std::vector<SensitivityCase>& cases,
                                         int k_points = 128) {
    CsvWriter w(path,
                "case_label,t_s,t_norm,voltage_v,css_neg,css_pos,ce0_neg,ceL_pos");
    for (const auto& sc : cases) {
        auto pts = resample_uniform(sc.curve, k_points);
        for (const auto& q : pts)
            w.raw(std::string(case_label(sc.kind)) + "," + format_double(q.t) + "," +
                  format_double(q.t / sc.curve.t_end) + "," + format_double(q.v) + "," +
                  format_double(q.css_neg) + "," + format_double(q.css_pos) + "," +
                  format_double(q.ce_neg0) + "," + format_double(q.ce_posL));
    }
}

} // namespace celldx
