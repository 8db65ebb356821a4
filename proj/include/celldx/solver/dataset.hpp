#pragma once

// Dataset builder: sample aging parameters, close their stoichiometric
// windows, run each discharge, and persist a manifest plus per-sample series
// files. Loaders for the training stages live here too so the column layout
// has a single owner.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "celldx/io/csv.hpp"
#include "celldx/params.hpp"
#include "celldx/solver/boundaries.hpp"
#include "celldx/solver/lhs.hpp"
#include "celldx/solver/simulate.hpp"

namespace celldx {

inline constexpr const char* kManifestHeader =
    "sample_id,eps_s_neg,eps_s_pos,x100_neg,x0_neg,x100_pos,x0_pos,"
    "capacity_ah,soh,duration_s,filtered";
inline constexpr const char* kSeriesHeader =
    "t_s,t_norm,current_a,voltage_v,css_neg,css_pos,ce0_neg,ceL_pos";

struct DatasetSample {
    int id = 0;
    AgingParams theta;
    double capacity_ah = 0.0, soh = 0.0, duration_s = 0.0;
    bool filtered = true;
};

struct SeriesPoint {
    double t_s, t_norm, current_a, voltage_v, css_neg, css_pos, ce0_neg, ceL_pos;
};

struct DatasetOptions {
    int n = 500;
    std::uint64_t seed = 1;
    int k_points = 128;
    double min_duration_s = 60.0;
    SolverOptions solver;
};

struct BuildStats {
    int n_total = 0, n_filtered = 0;
    double fresh_capacity_ah = 0.0;
};

inline std::string series_file_name(int id) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%05d.csv", id);
    return buf;
}

inline BuildStats build_dataset(const DatasetOptions& opt, const CellParams& cell,
                                const AgingRanges& box, const OcpCurve& ocp_neg,
                                const OcpCurve& ocp_pos, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(out_dir) / "series");

    BuildStats stats;
    stats.n_total = opt.n;
    AgingParams fresh = AgingParams::fresh(cell);
    auto fresh_curve = simulate_discharge(fresh, cell, ocp_neg, ocp_pos, opt.solver);
    if (!fresh_curve.ok())
        throw std::runtime_error("dataset build: fresh discharge did not reach cutoff");
    stats.fresh_capacity_ah = fresh_curve.capacity_ah;

    // sampled axes: eps_s_neg, eps_s_pos, x100_neg, x0_pos; the other two are
    // closed from the rest voltages
    const int axes[4] = {0, 1, 2, 5};
    Rng rng(stage_seed(opt.seed, "dataset-lhs"));
    auto unit = latin_hypercube(opt.n, 4, rng);
    auto lo = box.lo, hi = box.hi;

    std::vector<DatasetSample> rows(opt.n);
    std::vector<std::string> series_blobs(opt.n);
    for (int i = 0; i < opt.n; ++i) {
        DatasetSample& s = rows[i];
        s.id = i;
        auto th = fresh.to_array();
        for (int d = 0; d < 4; ++d)
            th[axes[d]] = lo[axes[d]] + (hi[axes[d]] - lo[axes[d]]) * unit[i][d];
        s.theta = AgingParams::from_array(th);
        if (!close_window(s.theta, cell, ocp_neg, ocp_pos)) {
            s.filtered = true;
            continue;
        }
        auto curve = simulate_discharge(s.theta, cell, ocp_neg, ocp_pos, opt.solver);
        s.duration_s = curve.t_end;
        s.capacity_ah = curve.capacity_ah;
        s.soh = curve.capacity_ah / stats.fresh_capacity_ah;
        s.filtered = !curve.ok() || curve.t_end < opt.min_duration_s;
        if (s.filtered) continue;

        auto pts = resample_uniform(curve, opt.k_points);
        std::ostringstream blob;
        CsvWriter w(blob, kSeriesHeader);
        for (const auto& q : pts)
            w.row({q.t, curve.t_end > 0 ? q.t / curve.t_end : 0.0, opt.solver.current,
                   q.v, q.css_neg, q.css_pos, q.ce_neg0, q.ce_posL});
        series_blobs[i] = blob.str();
    }

    for (const auto& s : rows)
        if (s.filtered) ++stats.n_filtered;

    std::ofstream mf(fs::path(out_dir) / "manifest.csv");
    CsvWriter w(mf, kManifestHeader);
    if (stats.n_filtered > 0.2 * stats.n_total)
        w.comment("warning: " + std::to_string(stats.n_filtered) + " of " +
                  std::to_string(stats.n_total) + " samples filtered");
    for (const auto& s : rows) {
        auto th = s.theta.to_array();
        w.row({double(s.id), th[0], th[1], th[2], th[3], th[4], th[5], s.capacity_ah,
               s.soh, s.duration_s, s.filtered ? 1.0 : 0.0});
        if (!s.filtered) {
            std::ofstream sf(fs::path(out_dir) / "series" / series_file_name(s.id));
            sf << series_blobs[s.id];
        }
    }
    return stats;
}

inline std::vector<DatasetSample> load_manifest(const std::string& dir) {
    auto csv = read_numeric_csv(dir + "/manifest.csv", kManifestHeader);
    std::vector<DatasetSample> out;
    out.reserve(csv.rows.size());
    for (const auto& r : csv.rows) {
        DatasetSample s;
        s.id = static_cast<int>(r[0]);
        s.theta = AgingParams::from_array({r[1], r[2], r[3], r[4], r[5], r[6]});
        s.capacity_ah = r[7];
        s.soh = r[8];
        s.duration_s = r[9];
        s.filtered = r[10] != 0.0;
        out.push_back(s);
    }
    return out;
}

inline std::vector<SeriesPoint> load_series(const std::string& dir, int id) {
    auto csv = read_numeric_csv(dir + "/series/" + series_file_name(id), kSeriesHeader);
    std::vector<SeriesPoint> out;
    out.reserve(csv.rows.size());
    for (const auto& r : csv.rows)
        out.push_back({r[0], r[1], r[2], r[3], r[4], r[5], r[6], r[7]});
    return out;
}

} // namespace celldx
