#pragma once

// Iterative baseline for window identification: derivative-free simplex search
// over the four sampled aging axes, each candidate closed and simulated with
// the reference solver at reduced resolution. Restarted from several seeds;
// the best basin wins.

#include <algorithm>
#include <array>
#include <vector>

#include "celldx/params.hpp"
#include "celldx/solver/boundaries.hpp"
#include "celldx/solver/dataset.hpp"
#include "celldx/solver/simulate.hpp"

namespace celldx {

inline SolverOptions oracle_solver_defaults() {
    SolverOptions s;
    s.dt = 2.0;
    s.n_r = 16;
    s.n_x = 10;
    return s;
}

struct OracleOptions {
    int multistarts = 5;
    int max_evals = 5000;
    double f_tol = 1e-12;
    double x_tol = 1e-8;
    std::uint64_t seed = 1;
    SolverOptions solver = oracle_solver_defaults();
};

struct OracleResult {
    AgingParams theta;
    double rmse_v = 1e300;
    int evals = 0;
    bool ok = false;
};

namespace detail {
inline constexpr int kOracleAxes[4] = {0, 1, 2, 5};

inline AgingParams theta_from_unit4(const std::array<double, 4>& u,
                                    const AgingRanges& box, const CellParams& p) {
    AgingParams th = AgingParams::fresh(p);
    auto arr = th.to_array();
    for (int d = 0; d < 4; ++d) {
        int ax = kOracleAxes[d];
        arr[ax] = box.lo[ax] + (box.hi[ax] - box.lo[ax]) * u[d];
    }
    return AgingParams::from_array(arr);
}

// mirror back into [0,1]
inline double reflect_unit(double x) {
    while (x < 0.0 || x > 1.0) {
        if (x < 0.0) x = -x;
        if (x > 1.0) x = 2.0 - x;
    }
    return x;
}
} // namespace detail

inline double oracle_window_rmse(const AgingParams& th, const CellParams& p,
                                 const OcpCurve& on, const OcpCurve& op,
                                 const std::vector<SeriesPoint>& window,
                                 const SolverOptions& sopt) {
    auto curve = simulate_discharge(th, p, on, op, sopt);
    if (curve.points.size() < 2) return 1e6;
    double sse = 0.0;
    size_t seg = 0;
    for (const auto& w : window) {
        double t = w.t_s, v;
        if (t >= curve.t_end) {
            v = curve.points.back().v;
        } else {
            while (seg + 2 < curve.points.size() && curve.points[seg + 1].t < t) ++seg;
            const auto &a = curve.points[seg], &b = curve.points[seg + 1];
            double u = (b.t > a.t) ? (t - a.t) / (b.t - a.t) : 0.0;
            v = a.v + u * (b.v - a.v);
        }
        double e = v - w.voltage_v;
        sse += e * e;
    }
    return std::sqrt(sse / window.size());
}

inline OracleResult identify_window_oracle(const std::vector<SeriesPoint>& window,
                                           const CellParams& p, const AgingRanges& box,
                                           const OcpCurve& on, const OcpCurve& op,
                                           const OracleOptions& opt) {
    OracleResult best;
    int evals_left = opt.max_evals;

    auto objective = [&](const std::array<double, 4>& u) {
        AgingParams th = detail::theta_from_unit4(u, box, p);
        if (!close_window(th, p, on, op)) return 1e6;
        return oracle_window_rmse(th, p, on, op, window, opt.solver);
    };

    Rng rng(stage_seed(opt.seed, "oracle-starts"));
    for (int start = 0; start < opt.multistarts && evals_left > 0; ++start) {
        int budget = std::min(evals_left, opt.max_evals / opt.multistarts);
        evals_left -= budget;

        using Pt = std::array<double, 4>;
        struct Vertex { Pt x; double f; };
        std::vector<Vertex> sx(5);
        Pt x0;
        for (auto& v : x0) v = rng.uniform(0.1, 0.9);
        auto eval_at = [&](Pt x) {
            for (auto& v : x) v = detail::reflect_unit(v);
            --budget;
            ++best.evals;
            return Vertex{x, objective(x)};
        };
        sx[0] = eval_at(x0);
        for (int d = 0; d < 4; ++d) {
            Pt x = x0;
            x[d] += (x[d] > 0.5 ? -0.15 : 0.15);
            sx[d + 1] = eval_at(x);
        }

        while (budget > 0) {
            std::sort(sx.begin(), sx.end(),
                      [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
            double spread = sx.back().f - sx.front().f;
            double diam = 0.0;
            for (int d = 0; d < 4; ++d)
                diam = std::max(diam, std::abs(sx.back().x[d] - sx.front().x[d]));
            if (spread < opt.f_tol || diam < opt.x_tol) break;

            Pt centroid{};
            for (int i = 0; i < 4; ++i)
                for (int d = 0; d < 4; ++d) centroid[d] += sx[i].x[d] / 4.0;

            auto blend = [&](double w) {
                Pt x;
                for (int d = 0; d < 4; ++d)
                    x[d] = centroid[d] + w * (centroid[d] - sx[4].x[d]);
                return x;
            };
            Vertex refl = eval_at(blend(1.0));
            if (refl.f < sx[0].f) {
                Vertex exp_v = budget > 0 ? eval_at(blend(2.0)) : refl;
                sx[4] = (exp_v.f < refl.f) ? exp_v : refl;
            } else if (refl.f < sx[3].f) {
                sx[4] = refl;
            } else {
                Vertex ctr = eval_at(blend(refl.f < sx[4].f ? 0.5 : -0.5));
                if (ctr.f < std::min(refl.f, sx[4].f)) {
                    sx[4] = ctr;
                } else {
                    for (int i = 1; i <= 4 && budget > 0; ++i) {
                        Pt x;
                        for (int d = 0; d < 4; ++d)
                            x[d] = sx[0].x[d] + 0.5 * (sx[i].x[d] - sx[0].x[d]);
                        sx[i] = eval_at(x);
                    }
                }
            }
        }

        std::sort(sx.begin(), sx.end(),
                  [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
        if (sx[0].f < best.rmse_v) {
            best.rmse_v = sx[0].f;
            best.theta = detail::theta_from_unit4(sx[0].x, box, p);
            close_window(best.theta, p, on, op);
            best.ok = true;
        }
    }
    return best;
}

} // namespace celldx
