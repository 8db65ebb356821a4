#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "celldx/analysis/dqdv.hpp"
#include "celldx/nets/soh.hpp"
#include "celldx/pipeline/config.hpp"
#include "celldx/pipeline/metrics.hpp"
#include "celldx/solver/boundaries.hpp"

namespace celldx {
namespace pipeline {

struct CellStack {
    CellParams cell;
    AgingRanges box;
    OcpCurve ocp_neg, ocp_pos;
    NormalizationSpec norm;
};

inline CellStack load_stack() {
    CellStack s;
    s.cell = CellParams::fresh();
    s.box = AgingRanges::defaults();
    std::string d = CELLDX_DATA_DIR;
    s.ocp_neg = OcpCurve::load(d + "/ocp_graphite_neg.csv");
    s.ocp_pos = OcpCurve::load(d + "/ocp_lfp_pos.csv");
    s.norm = NormalizationSpec::make(s.cell, s.box);
    return s;
}

inline std::string identifier_path(const std::string& model_dir) {
    return model_dir + "/identifier.txt";
}
inline std::string soh_head_path(const std::string& model_dir) {
    return model_dir + "/soh_head.txt";
}

inline void need_file(const std::string& path, const std::string& hint) {
    if (!std::filesystem::exists(path))
        throw OrderingError("missing " + path + "; " + hint);
}

inline Tensor row_of(const Tensor& x, int r) {
    Tensor out(1, x.cols);
    for (int c = 0; c < x.cols; ++c) out.at(0, c) = x.at(r, c);
    return out;
}

inline std::vector<SeriesPoint> read_window_csv(const std::string& path) {
    auto csv = read_numeric_csv(path, kSeriesHeader);
    if (csv.rows.size() < 2) throw SchemaError(path + ": window needs at least 2 rows");
    std::vector<SeriesPoint> pts;
    pts.reserve(csv.rows.size());
    for (size_t i = 0; i < csv.rows.size(); ++i) {
        const auto& r = csv.rows[i];
        pts.push_back({r[0], r[1], r[2], r[3], r[4], r[5], r[6], r[7]});
        if (i > 0 && !(pts[i].t_norm > pts[i - 1].t_norm))
            throw SchemaError(path + ": t_norm must increase monotonically");
    }
    return pts;
}

// Linear resample onto k uniform normalized-time points; windows recorded at
// a different length than the network input shape are accepted this way.
inline std::vector<SeriesPoint> resample_window(const std::vector<SeriesPoint>& pts, int k) {
    if (static_cast<int>(pts.size()) == k) return pts;
    std::vector<SeriesPoint> out;
    out.reserve(static_cast<size_t>(k));
    double lo = pts.front().t_norm, hi = pts.back().t_norm;
    size_t seg = 0;
    for (int j = 0; j < k; ++j) {
        double tj = lo + (hi - lo) * j / double(k - 1);
        while (seg + 2 < pts.size() && pts[seg + 1].t_norm < tj) ++seg;
        const auto& a = pts[seg];
        const auto& b = pts[seg + 1];
        double w = (tj - a.t_norm) / (b.t_norm - a.t_norm);
        SeriesPoint q;
        q.t_s = a.t_s + w * (b.t_s - a.t_s);
        q.t_norm = tj;
        q.current_a = a.current_a + w * (b.current_a - a.current_a);
        q.voltage_v = a.voltage_v + w * (b.voltage_v - a.voltage_v);
        q.css_neg = a.css_neg + w * (b.css_neg - a.css_neg);
        q.css_pos = a.css_pos + w * (b.css_pos - a.css_pos);
        q.ce0_neg = a.ce0_neg + w * (b.ce0_neg - a.ce0_neg);
        q.ceL_pos = a.ceL_pos + w * (b.ceL_pos - a.ceL_pos);
        out.push_back(q);
    }
    return out;
}

inline Tensor window_row(const std::vector<SeriesPoint>& pts, const NormalizationSpec& nm) {
    int k = static_cast<int>(pts.size());
    Tensor x(1, 3 * k);
    for (int j = 0; j < k; ++j) {
        x.at(0, 0 * k + j) = nm.voltage.to_unit(pts[static_cast<size_t>(j)].voltage_v);
        x.at(0, 1 * k + j) = nm.current.to_unit(pts[static_cast<size_t>(j)].current_a);
        x.at(0, 2 * k + j) = pts[static_cast<size_t>(j)].t_norm;
    }
    return x;
}

inline double window_recon_rmse(const SurrogateModel& surr, const CellStack& st,
                                const std::array<double, AgingParams::kDim>& theta_unit,
                                const std::vector<SeriesPoint>& pts) {
    double s = 0.0;
    for (const auto& q : pts) {
        double v = reconstruct_voltage(surr, st.cell, st.ocp_neg, st.ocp_pos, theta_unit,
                                       q.current_a, q.t_norm);
        s += (v - q.voltage_v) * (v - q.voltage_v);
    }
    return std::sqrt(s / static_cast<double>(pts.size()));
}

// sample id from a series file name like series/00042.csv; -1 when the stem
// is not a plain number
inline int id_from_path(const std::string& path) {
    std::string stem = std::filesystem::path(path).stem().string();
    if (stem.empty() || stem.find_first_not_of("0123456789") != std::string::npos)
        return -1;
    return std::stoi(stem);
}

// multiply-adds of one identify+estimate pass, counted as two operations each
inline double ops_per_window(int k) {
    int l1 = k - 2, p1 = l1 / 2;
    int l2 = p1 - 2, p2 = l2 / 2;
    double conv1 = 2.0 * (3 * 3) * 16 * l1;
    double conv2 = 2.0 * (16 * 3) * 32 * l2;
    double fc = 2.0 * (32.0 * p2) * 64 + 2.0 * 64 * AgingParams::kDim;
    double soh = 2.0 * (AgingParams::kDim * 64 + 64 * 32 + 32 * 1);
    return conv1 + conv2 + fc + soh;
}

inline const char* theta_csv_pred_header() {
    return "window,eps_s_neg,eps_s_pos,x100_neg,x0_neg,x100_pos,x0_pos,recon_rmse_v";
}

inline int cmd_gen_data(const RunConfig& cfg) {
    CellStack st = load_stack();
    cfg.write_snapshot(cfg.data_dir);
    BuildStats stats = build_dataset(cfg.dataset(st.cell), st.cell, st.box, st.ocp_neg,
                                     st.ocp_pos, cfg.data_dir);
    std::cout << "dataset " << cfg.data_dir << ": " << (stats.n_total - stats.n_filtered)
              << " samples kept, " << stats.n_filtered << " filtered, fresh capacity "
              << format_double(stats.fresh_capacity_ah) << " Ah\n";
    return 0;
}

inline int cmd_train(const std::string& stage, const RunConfig& cfg) {
    CellStack st = load_stack();
    need_file(cfg.data_dir + "/manifest.csv",
              "run `celldx gen-data --out " + cfg.data_dir + "` first");
    std::filesystem::create_directories(cfg.model_dir);
    double val_frac = 1.0 - cfg.split_ratio;

    if (stage == "surrogate") {
        std::array<HeadReport, kSurrogateHeads> reps;
        SurrogateModel model = train_surrogate(cfg.data_dir, st.cell, st.box, cfg.surrogate,
                                               reps, cfg.seed, val_frac);
        save_surrogate(cfg.model_dir, model, cfg.surrogate, reps);
        CsvWriter w(cfg.model_dir + "/surrogate_report.csv", "head,epoch,val_mse");
        for (int h = 0; h < kSurrogateHeads; ++h)
            for (size_t e = 0; e < reps[h].val_history.size(); ++e)
                w.raw(std::string(surrogate_tag(h)) + "," + std::to_string(e + 1) + "," +
                      format_double(reps[h].val_history[e]));
        cfg.write_snapshot(cfg.model_dir);
        for (int h = 0; h < kSurrogateHeads; ++h)
            std::cout << surrogate_tag(h) << ": " << reps[h].epochs << " epochs, held-out rmse "
                      << format_double(reps[h].val_rmse_phys) << " mol/m^3\n";
        return 0;
    }

    if (stage == "ident") {
        for (int h = 0; h < kSurrogateHeads; ++h)
            need_file(surrogate_file(cfg.model_dir, h), "run `celldx train surrogate` first");
        SurrogateModel surr = load_surrogate(cfg.model_dir);
        std::array<std::uint64_t, kSurrogateHeads> before{};
        for (int h = 0; h < kSurrogateHeads; ++h)
            before[static_cast<size_t>(h)] = hash_file(surrogate_file(cfg.model_dir, h));

        auto [train_ids, val_ids] = split_samples(cfg.data_dir, cfg.seed, val_frac);
        WindowRows wtrain = assemble_windows(cfg.data_dir, surr.norm, train_ids);
        WindowRows wval = assemble_windows(cfg.data_dir, surr.norm, val_ids);
        Rng rng(stage_seed(cfg.ident.seed, "identifier-init"));
        IdentifierModel m = IdentifierModel::make(wtrain.k_points, surr.norm, rng);
        IdentReport rep =
            train_identifier(m, surr, st.cell, st.ocp_neg, st.ocp_pos, wtrain, wval, cfg.ident);

        for (int h = 0; h < kSurrogateHeads; ++h)
            if (hash_file(surrogate_file(cfg.model_dir, h)) != before[static_cast<size_t>(h)])
                throw std::runtime_error("surrogate checkpoint changed while the identifier trained: " +
                                         surrogate_file(cfg.model_dir, h));
        save_identifier(identifier_path(cfg.model_dir), m, cfg.ident, rep);
        CsvWriter w(cfg.model_dir + "/identifier_report.csv", "epoch,val_recon_mse");
        for (size_t e = 0; e < rep.val_history.size(); ++e)
            w.raw(std::to_string(e + 1) + "," + format_double(rep.val_history[e]));
        cfg.write_snapshot(cfg.model_dir);
        std::cout << "identifier: " << rep.epochs << " epochs, held-out reconstruction rmse "
                  << format_double(rep.val_recon_rmse_v) << " V\n";
        return 0;
    }

    // soh
    need_file(identifier_path(cfg.model_dir), "run `celldx train ident` first");
    IdentifierModel ident = load_identifier(identifier_path(cfg.model_dir));

    std::vector<std::string> frozen;
    for (int h = 0; h < kSurrogateHeads; ++h)
        if (std::filesystem::exists(surrogate_file(cfg.model_dir, h)))
            frozen.push_back(surrogate_file(cfg.model_dir, h));
    frozen.push_back(identifier_path(cfg.model_dir));
    std::vector<std::uint64_t> before;
    for (const auto& f : frozen) before.push_back(hash_file(f));

    auto [train_ids, val_ids] = split_samples(cfg.data_dir, cfg.seed, val_frac);
    WindowRows wtrain = assemble_windows(cfg.data_dir, ident.norm, train_ids);
    WindowRows wval = assemble_windows(cfg.data_dir, ident.norm, val_ids);
    SohRows tr = soh_rows_from_windows(ident, wtrain);
    SohRows va = soh_rows_from_windows(ident, wval);

    MetricsTable mt;
    double mean_rmse = 0.0;
    for (int trial = 1; trial <= cfg.trials; ++trial) {
        SohTrainConfig tc = cfg.soh;
        tc.seed = cfg.soh.seed + static_cast<std::uint64_t>(trial - 1);
        Rng rng(stage_seed(tc.seed, "soh-init"));
        SohModel m = SohModel::make(ident.norm, rng);
        SohReport rep = train_soh(m, tr, va, tc);
        mean_rmse += rep.val_rmse;
        mt.add("soh", trial, "val_rmse", rep.val_rmse);
        mt.add("soh", trial, "epochs", rep.epochs);
        if (trial == 1) {
            save_soh(soh_head_path(cfg.model_dir), m, tc, rep);
            CsvWriter w(cfg.model_dir + "/soh_report.csv", "epoch,val_mse");
            for (size_t e = 0; e < rep.val_history.size(); ++e)
                w.raw(std::to_string(e + 1) + "," + format_double(rep.val_history[e]));
            MonotonicityReport probe = soh_monotonicity_probe(m);
            mt.add("soh", 0, "monotonicity_violations_eps_neg", probe.eps_neg_violations);
            mt.add("soh", 0, "monotonicity_violations_eps_pos", probe.eps_pos_violations);
        }
    }
    mean_rmse /= cfg.trials;
    mt.add("soh", 0, "val_rmse_mean", mean_rmse);
    mt.write(cfg.model_dir + "/soh_trials.csv");

    for (size_t i = 0; i < frozen.size(); ++i)
        if (hash_file(frozen[i]) != before[i])
            throw std::runtime_error("frozen checkpoint changed while the capacity head trained: " +
                                     frozen[i]);
    cfg.write_snapshot(cfg.model_dir);
    std::cout << "soh head: mean held-out rmse " << format_double(mean_rmse) << " over "
              << cfg.trials << " trials\n";
    return 0;
}

inline int cmd_eval(const RunConfig& cfg, const std::string& out_dir) {
    CellStack st = load_stack();
    need_file(cfg.data_dir + "/manifest.csv", "run `celldx gen-data` first");
    for (int h = 0; h < kSurrogateHeads; ++h)
        need_file(surrogate_file(cfg.model_dir, h), "run `celldx train surrogate` first");
    need_file(identifier_path(cfg.model_dir), "run `celldx train ident` first");
    need_file(soh_head_path(cfg.model_dir), "run `celldx train soh` first");

    SurrogateModel surr = load_surrogate(cfg.model_dir);
    IdentifierModel ident = load_identifier(identifier_path(cfg.model_dir));
    SohModel soh = load_soh(soh_head_path(cfg.model_dir));
    double val_frac = 1.0 - cfg.split_ratio;

    std::filesystem::create_directories(out_dir);
    MetricsTable mt;

    // surrogate: held-out concentration error in physical units
    SupervisedRows data = assemble_supervised(cfg.data_dir, surr.norm, cfg.seed, val_frac);
    Tensor x_val = gather_rows(data.x, data.val_rows, 0, data.val_rows.size());
    for (int h = 0; h < kSurrogateHeads; ++h) {
        Tensor y_val = gather_rows(data.y[static_cast<size_t>(h)], data.val_rows, 0,
                                   data.val_rows.size());
        double width = h == 0   ? st.cell.neg.c_s_max
                       : h == 1 ? st.cell.pos.c_s_max
                                : surr.norm.ce.width();
        double rmse = std::sqrt(mse_of(surr.heads[static_cast<size_t>(h)], x_val, y_val)) * width;
        mt.add("surrogate", 0, std::string(surrogate_tag(h) + 10) + "_rmse_mol_m3", rmse);
    }

    // identification on the held-out windows
    auto [train_ids, val_ids] = split_samples(cfg.data_dir, cfg.seed, val_frac);
    (void)train_ids;
    WindowRows w = assemble_windows(cfg.data_dir, surr.norm, val_ids);
    Tensor th_hat = ident.predict(w.x);
    int n = th_hat.rows;

    {
        std::string hdr = "sample_id";
        for (int a = 0; a < AgingParams::kDim; ++a)
            hdr += std::string(",") + AgingParams::names()[a] + "_true";
        for (int a = 0; a < AgingParams::kDim; ++a)
            hdr += std::string(",") + AgingParams::names()[a] + "_pred";
        CsvWriter tw(out_dir + "/theta.csv", hdr);
        for (int i = 0; i < n; ++i) {
            auto t6 = w.theta_true[static_cast<size_t>(i)].to_array();
            std::array<double, AgingParams::kDim> un;
            for (int a = 0; a < AgingParams::kDim; ++a) un[static_cast<size_t>(a)] = th_hat.at(i, a);
            auto p6 = surr.norm.theta_from_unit(un).to_array();
            std::string line = std::to_string(w.sample_ids[static_cast<size_t>(i)]);
            for (double v : t6) line += "," + format_double(v);
            for (double v : p6) line += "," + format_double(v);
            tw.raw(line);
        }
    }
    for (int a = 0; a < AgingParams::kDim; ++a) {
        double s = 0.0;
        double width = surr.norm.theta[a].width();
        for (int i = 0; i < n; ++i) {
            double tu = surr.norm.theta_to_unit(w.theta_true[static_cast<size_t>(i)])[static_cast<size_t>(a)];
            double e = (th_hat.at(i, a) - tu) * width;
            s += e * e;
        }
        mt.add("ident", 0, std::string(AgingParams::names()[a]) + "_rmse", std::sqrt(s / n));
    }
    double recon = recon_mse(ident, surr, st.cell, st.ocp_neg, st.ocp_pos, w);
    mt.add("ident", 0, "recon_rmse_v", std::sqrt(recon) * surr.norm.voltage.width());

    // capacity ratio
    Tensor soh_pred = soh.predict(th_hat);
    {
        CsvWriter sw(out_dir + "/soh.csv", "sample_id,soh_true,soh_pred,abs_err");
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
            double t = w.soh_true[static_cast<size_t>(i)], p = soh_pred.at(i, 0);
            s += (p - t) * (p - t);
            sw.raw(std::to_string(w.sample_ids[static_cast<size_t>(i)]) + "," + format_double(t) +
                   "," + format_double(p) + "," + format_double(std::abs(p - t)));
        }
        mt.add("soh", 0, "rmse", std::sqrt(s / n));
    }

    // latency of one identify+estimate pass
    {
        Tensor probe = row_of(w.x, 0);
        identify_and_estimate(ident, soh, probe); // warm up
        int reps = std::min(n, 64);
        auto t0 = std::chrono::steady_clock::now();
        for (int i = 0; i < reps; ++i)
            identify_and_estimate(ident, soh, row_of(w.x, i % n));
        auto t1 = std::chrono::steady_clock::now();
        double ms = std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
        mt.add("eval", 0, "identify_estimate_ms_mean", ms);
        mt.add("eval", 0, "op_count_per_window", ops_per_window(w.k_points));
        mt.add("eval", 0, "n_test_windows", n);
    }

    mt.write(out_dir + "/metrics.csv");
    cfg.write_snapshot(out_dir);
    for (const auto& r : mt.rows)
        if (r.trial == 0)
            std::cout << r.stage << "." << r.metric << " = " << format_double(r.value) << "\n";
    return 0;
}

inline int cmd_identify(const std::vector<std::string>& files, const RunConfig& cfg,
                        const std::string& out_dir) {
    CellStack st = load_stack();
    for (int h = 0; h < kSurrogateHeads; ++h)
        need_file(surrogate_file(cfg.model_dir, h), "run `celldx train surrogate` first");
    need_file(identifier_path(cfg.model_dir), "run `celldx train ident` first");
    SurrogateModel surr = load_surrogate(cfg.model_dir);
    IdentifierModel ident = load_identifier(identifier_path(cfg.model_dir));

    std::filesystem::create_directories(out_dir);
    CsvWriter w(out_dir + "/theta.csv", theta_csv_pred_header());
    for (const auto& f : files) {
        auto pts = resample_window(read_window_csv(f), ident.k_points);
        Tensor x = window_row(pts, ident.norm);
        Tensor th = ident.predict(x);
        std::array<double, AgingParams::kDim> un;
        for (int a = 0; a < AgingParams::kDim; ++a) un[static_cast<size_t>(a)] = th.at(0, a);
        auto phys = ident.norm.theta_from_unit(un).to_array();
        double rmse = window_recon_rmse(surr, st, un, pts);
        std::string line = std::filesystem::path(f).filename().string();
        for (double v : phys) line += "," + format_double(v);
        line += "," + format_double(rmse);
        w.raw(line);
    }
    cfg.write_snapshot(out_dir);
    std::cout << "identified " << files.size() << " window(s) -> " << out_dir << "/theta.csv\n";
    return 0;
}

inline int cmd_estimate(const std::vector<std::string>& files, const RunConfig& cfg,
                        const std::string& out_dir, bool with_labels) {
    need_file(identifier_path(cfg.model_dir), "run `celldx train ident` first");
    need_file(soh_head_path(cfg.model_dir), "run `celldx train soh` first");
    IdentifierModel ident = load_identifier(identifier_path(cfg.model_dir));
    SohModel soh = load_soh(soh_head_path(cfg.model_dir));

    std::map<int, double> labels;
    if (with_labels)
        for (const auto& s : load_manifest(cfg.data_dir))
            if (!s.filtered) labels[s.id] = s.soh;

    std::filesystem::create_directories(out_dir);
    CsvWriter w(out_dir + "/soh.csv", "sample_id,soh_true,soh_pred,abs_err");
    int next_id = 0;
    for (const auto& f : files) {
        auto pts = resample_window(read_window_csv(f), ident.k_points);
        EstimateResult r = identify_and_estimate(ident, soh, window_row(pts, ident.norm));
        int id = id_from_path(f);
        if (id < 0) id = next_id;
        ++next_id;
        auto it = labels.find(id);
        double truth = it == labels.end() ? std::numeric_limits<double>::quiet_NaN() : it->second;
        double err = std::isnan(truth) ? truth : std::abs(truth - r.soh);
        w.raw(std::to_string(id) + "," + format_double(truth) + "," + format_double(r.soh) +
              "," + format_double(err));
    }
    cfg.write_snapshot(out_dir);
    std::cout << "estimated " << files.size() << " window(s) -> " << out_dir << "/soh.csv\n";
    return 0;
}

inline int cmd_dqdv(const RunConfig& cfg, const std::string& out_dir,
                    const std::string& perturb, double bin_width) {
    CellStack st = load_stack();
    std::vector<DegradationCase> kinds = {DegradationCase::Fresh};
    if (perturb == "lam_ne") kinds.push_back(DegradationCase::LamNe);
    else if (perturb == "lam_pe") kinds.push_back(DegradationCase::LamPe);
    else if (perturb == "lli") kinds.push_back(DegradationCase::Lli);

    AgingParams base = AgingParams::fresh(st.cell);
    SolverOptions opt = cfg.solver(st.cell);
    std::vector<SensitivityCase> cases;
    for (auto kind : kinds) {
        SensitivityCase sc;
        sc.kind = kind;
        sc.theta = apply_case(base, kind, st.cell);
        sc.curve = simulate_discharge(sc.theta, st.cell, st.ocp_neg, st.ocp_pos, opt);
        if (!sc.curve.ok())
            throw std::runtime_error(std::string("case '") + case_label(kind) +
                                     "' did not reach the cutoff voltage");
        sc.dqdv = dqdv_curve(sc.curve, opt.current, bin_width);
        cases.push_back(std::move(sc));
    }
    std::filesystem::create_directories(out_dir);
    write_dqdv_csv(out_dir + "/dqdv.csv", cases);
    cfg.write_snapshot(out_dir);
    std::cout << "wrote " << cases.size() << " curve(s) -> " << out_dir << "/dqdv.csv\n";
    return 0;
}

inline int cmd_sensitivity(const RunConfig& cfg, const std::string& out_dir) {
    CellStack st = load_stack();
    auto cases = run_sensitivity(AgingParams::fresh(st.cell), st.cell, st.ocp_neg, st.ocp_pos,
                                 cfg.solver(st.cell));
    std::filesystem::create_directories(out_dir);
    write_dqdv_csv(out_dir + "/dqdv.csv", cases);
    write_sensitivity_series_csv(out_dir + "/sensitivity_series.csv", cases, cfg.k_points);
    cfg.write_snapshot(out_dir);
    for (const auto& sc : cases)
        std::cout << case_label(sc.kind) << ": capacity " << format_double(sc.curve.capacity_ah)
                  << " Ah, duration " << format_double(sc.curve.t_end) << " s\n";
    return 0;
}

} // namespace pipeline

inline int cli_main(int argc, char** argv) {
    CLI::App app{"battery aging pipeline: simulate discharges, train the surrogate /"
                 " identifier / capacity stages, evaluate, and analyze degradation"};
    app.require_subcommand(1);

    std::optional<std::string> config_path, out_dir, data_dir, model_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    bool paper_scale = false;

    auto add_common = [&](CLI::App* c) {
        c->add_option("--config", config_path, "key = value configuration file")
            ->check(CLI::ExistingFile);
        c->add_option("--seed", seed, "root seed; stage seeds derive from it");
        c->add_option("--trials", trials, "independent repeats for trial reports")
            ->check(CLI::PositiveNumber);
        c->add_flag("--paper-scale", paper_scale, "use the full 5200-sample dataset");
        c->add_option("--out", out_dir, "output directory");
        return c;
    };

    CLI::App* gen = add_common(app.add_subcommand("gen-data", "simulate the aging dataset"));
    std::optional<int> gen_n;
    gen->add_option("--n", gen_n, "number of samples")->check(CLI::PositiveNumber);

    CLI::App* train = add_common(app.add_subcommand("train", "train one pipeline stage"));
    std::string stage;
    train->add_option("stage", stage, "surrogate | ident | soh")
        ->required()
        ->check(CLI::IsMember({"surrogate", "ident", "soh"}));
    train->add_option("--data", data_dir, "dataset directory");

    CLI::App* ev = add_common(app.add_subcommand("eval", "held-out metrics for every stage"));
    ev->add_option("--data", data_dir, "dataset directory");
    ev->add_option("--models", model_dir, "checkpoint directory");

    CLI::App* idf =
        add_common(app.add_subcommand("identify", "aging parameters from discharge windows"));
    std::vector<std::string> idf_files;
    idf->add_option("windows", idf_files, "series csv files")
        ->required()
        ->check(CLI::ExistingFile);
    idf->add_option("--models", model_dir, "checkpoint directory");

    CLI::App* est =
        add_common(app.add_subcommand("estimate", "state of health from discharge windows"));
    std::vector<std::string> est_files;
    est->add_option("windows", est_files, "series csv files")
        ->required()
        ->check(CLI::ExistingFile);
    est->add_option("--models", model_dir, "checkpoint directory");
    std::optional<std::string> est_data;
    est->add_option("--data", est_data, "dataset directory with labels for soh_true");

    CLI::App* dq = add_common(app.add_subcommand("dqdv", "incremental-capacity curves"));
    std::string perturb;
    dq->add_option("--perturb", perturb, "degradation mechanism to overlay")
        ->check(CLI::IsMember({"lam_ne", "lam_pe", "lli"}));
    double bin_width = 0.010;
    dq->add_option("--bin-width", bin_width, "voltage bin width, V")
        ->check(CLI::PositiveNumber);

    CLI::App* sens =
        add_common(app.add_subcommand("sensitivity", "per-mechanism degradation comparison"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        RunConfig cfg;
        if (config_path) cfg.load_file(*config_path);
        if (seed) cfg.set_seed(*seed);
        if (trials) cfg.trials = *trials;
        if (paper_scale) cfg.n_samples = 5200;
        if (gen_n) cfg.n_samples = *gen_n;
        if (data_dir) cfg.data_dir = *data_dir;
        if (model_dir) cfg.model_dir = *model_dir;
        cfg.validate("command line");

        if (gen->parsed()) {
            if (out_dir) cfg.data_dir = *out_dir;
            return pipeline::cmd_gen_data(cfg);
        }
        if (train->parsed()) {
            if (out_dir) cfg.model_dir = *out_dir;
            return pipeline::cmd_train(stage, cfg);
        }
        if (ev->parsed()) return pipeline::cmd_eval(cfg, out_dir.value_or("out/eval"));
        if (idf->parsed())
            return pipeline::cmd_identify(idf_files, cfg, out_dir.value_or("out/identify"));
        if (est->parsed()) {
            if (est_data) cfg.data_dir = *est_data;
            return pipeline::cmd_estimate(est_files, cfg, out_dir.value_or("out/estimate"),
                                          est_data.has_value());
        }
        if (dq->parsed())
            return pipeline::cmd_dqdv(cfg, out_dir.value_or("out/dqdv"), perturb, bin_width);
        if (sens->parsed())
            return pipeline::cmd_sensitivity(cfg, out_dir.value_or("out/sensitivity"));
        return 1;
    } catch (const SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const OrderingError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}

} // namespace celldx
