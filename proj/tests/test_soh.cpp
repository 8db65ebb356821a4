#include <catch2/catch_amalgamated.hpp>

#include <fstream>

#include "celldx/analysis/dqdv.hpp"
#include "celldx/nets/oracle.hpp"
#include "celldx/nets/soh.hpp"

using namespace celldx;

namespace {
const CellParams& cell() {
    static CellParams p = CellParams::fresh();
    return p;
}
std::string data_path(const char* name) {
    return std::string(CELLDX_DATA_DIR) + "/" + name;
}
const OcpCurve& ocp_neg() {
    static OcpCurve c = OcpCurve::load(data_path("ocp_graphite_neg.csv"));
    return c;
}
const OcpCurve& ocp_pos() {
    static OcpCurve c = OcpCurve::load(data_path("ocp_lfp_pos.csv"));
    return c;
}

const std::vector<SensitivityCase>& cases() {
    static std::vector<SensitivityCase> cs = run_sensitivity(
        AgingParams::fresh(cell()), cell(), ocp_neg(), ocp_pos(), oracle_solver_defaults());
    return cs;
}
const SensitivityCase& by_kind(DegradationCase k) {
    for (const auto& sc : cases())
        if (sc.kind == k) return sc;
    throw std::logic_error("case missing");
}
} // namespace

TEST_CASE("incremental capacity integrates back to coulomb-counted capacity") {
    const auto& fresh = by_kind(DegradationCase::Fresh);
    REQUIRE(fresh.dqdv.size() >= 3);
    for (size_t i = 1; i < fresh.dqdv.size(); ++i)
        REQUIRE(fresh.dqdv[i].v > fresh.dqdv[i - 1].v);
    double q = dqdv_integral(fresh.dqdv, 0.010);
    REQUIRE(q == Catch::Approx(fresh.curve.capacity_ah).epsilon(1e-9));

    // rebinning conserves charge
    auto half = dqdv_curve(fresh.curve, 4.4, 0.005);
    REQUIRE(dqdv_integral(half, 0.005) ==
            Catch::Approx(fresh.curve.capacity_ah).epsilon(1e-9));
}

TEST_CASE("too narrow a voltage span is rejected") {
    DischargeCurve c;
    for (int i = 0; i <= 10; ++i)
        c.points.push_back({i * 1.0, 2.015 - 0.0015 * i, 0, 0, 0, 0});
    c.t_end = 10.0;
    c.capacity_ah = 4.4 * 10.0 / 3600.0;
    REQUIRE_THROWS_AS(dqdv_curve(c, 4.4, 0.010), SchemaError);
    REQUIRE_THROWS_AS(dqdv_curve(c, 4.4, -1.0), SchemaError);
}

TEST_CASE("lithium-inventory case rebalances the positive window") {
    AgingParams base = AgingParams::fresh(cell());
    AgingParams lli = apply_case(base, DegradationCase::Lli, cell());
    REQUIRE(lli.x100_neg == Catch::Approx(0.7155).margin(1e-12));
    // moles shed at top of charge match between electrodes
    REQUIRE(lli.x100_pos == Catch::Approx(0.1059501762623495).margin(1e-12));
    REQUIRE(lli.eps_s_neg == base.eps_s_neg);
    REQUIRE(lli.x0_pos == base.x0_pos);

    AgingParams lam = apply_case(base, DegradationCase::LamNe, cell());
    REQUIRE(lam.eps_s_neg == Catch::Approx(0.9 * base.eps_s_neg));
    REQUIRE(lam.x100_neg == base.x100_neg);
}

TEST_CASE("every degradation mechanism truncates capacity") {
    const auto& fresh = by_kind(DegradationCase::Fresh);
    for (auto k : {DegradationCase::LamNe, DegradationCase::LamPe, DegradationCase::Lli}) {
        const auto& sc = by_kind(k);
        REQUIRE(sc.curve.capacity_ah < fresh.curve.capacity_ah);
        REQUIRE(sc.curve.t_end < fresh.curve.t_end);
    }

    // the negative-electrode material loss reshapes the main peak
    auto peak = [](const std::vector<DqdvPoint>& c) {
        double best = -1.0;
        for (const auto& p : c) best = std::max(best, p.dq_dv);
        return best;
    };
    REQUIRE(peak(by_kind(DegradationCase::LamNe).dqdv) <
            0.9 * peak(fresh.dqdv));
}

TEST_CASE("inventory loss shifts the solid window but not the electrolyte") {
    const auto& fresh = by_kind(DegradationCase::Fresh).curve;
    const auto& lli = by_kind(DegradationCase::Lli).curve;
    size_t n = std::min(fresh.points.size(), lli.points.size()) - 1;

    // surface concentration runs parallel to fresh: a pure offset
    double mean = 0.0;
    for (size_t i = 0; i < n; ++i)
        mean += lli.points[i].css_neg - fresh.points[i].css_neg;
    mean /= static_cast<double>(n);
    REQUIRE(mean < -2000.0);
    for (size_t i = 0; i < n; ++i) {
        double d = lli.points[i].css_neg - fresh.points[i].css_neg;
        REQUIRE(d == Catch::Approx(mean).margin(1e-6));
    }

    // liquid-phase boundary history is current-driven only
    for (size_t i = 0; i < n; ++i) {
        REQUIRE(lli.points[i].ce_neg0 == Catch::Approx(fresh.points[i].ce_neg0).margin(1e-9));
        REQUIRE(lli.points[i].ce_posL == Catch::Approx(fresh.points[i].ce_posL).margin(1e-9));
    }
}

TEST_CASE("analysis csv outputs") {
    write_dqdv_csv("dqdv_out.csv", cases());
    write_sensitivity_series_csv("sens_out.csv", cases(), 32);

    std::ifstream f("dqdv_out.csv");
    std::string line;
    REQUIRE(std::getline(f, line));
    REQUIRE(line == "v_volts,dq_dv_ah_per_v,case_label");
    size_t rows = 0, fresh_rows = 0;
    while (std::getline(f, line)) {
        ++rows;
        if (line.find(",fresh") != std::string::npos) ++fresh_rows;
    }
    size_t expect = 0;
    for (const auto& sc : cases()) expect += sc.dqdv.size();
    REQUIRE(rows == expect);
    REQUIRE(fresh_rows == by_kind(DegradationCase::Fresh).dqdv.size());

    std::ifstream g("sens_out.csv");
    REQUIRE(std::getline(g, line));
    REQUIRE(line == "case_label,t_s,t_norm,voltage_v,css_neg,css_pos,ce0_neg,ceL_pos");
    rows = 0;
    while (std::getline(g, line)) ++rows;
    REQUIRE(rows == 4 * 32);
}

namespace {
// smooth synthetic labels standing in for capacity ratios
SohRows synthetic_rows(int n, uint64_t seed) {
    Rng rng(seed);
    SohRows r;
    r.x = Tensor(n, AgingParams::kDim);
    r.y = Tensor(n, 1);
    for (int i = 0; i < n; ++i) {
        for (int c = 0; c < AgingParams::kDim; ++c) r.x.at(i, c) = rng.uniform();
        double u0 = r.x.at(i, 0), u1 = r.x.at(i, 1);
        r.y.at(i, 0) = 0.62 + 0.30 * (0.5 * u0 + 0.3 * u1 + 0.2 * u0 * u1);
        r.sample_ids.push_back(i);
    }
    return r;
}
} // namespace

TEST_CASE("capacity head learns a smooth map and beats the constant predictor") {
    SohRows train = synthetic_rows(200, 91);
    SohRows val = synthetic_rows(48, 92);

    double mean = 0.0, var = 0.0;
    for (double v : val.y.d) mean += v;
    mean /= static_cast<double>(val.y.d.size());
    for (double v : val.y.d) var += (v - mean) * (v - mean);
    double label_std = std::sqrt(var / static_cast<double>(val.y.d.size()));

    NormalizationSpec nm = NormalizationSpec::make(cell(), AgingRanges::defaults());
    Rng rng(stage_seed(7, "soh-init"));
    SohModel m = SohModel::make(nm, rng);
    SohTrainConfig cfg;
    cfg.seed = 7;
    auto rep = train_soh(m, train, val, cfg);

    REQUIRE(rep.val_rmse < label_std);
    REQUIRE(rep.val_rmse < 0.02);
    REQUIRE(rep.epochs >= 1);

    for (double v : m.predict(val.x).d) {
        REQUIRE(v > 0.0);
        REQUIRE(v < 1.0);
    }

    auto probe = soh_monotonicity_probe(m);
    REQUIRE(probe.steps == 21);
    REQUIRE(probe.eps_neg_violations <= probe.steps);

    save_soh("soh_ck.txt", m, cfg, rep);
    SohModel back = load_soh("soh_ck.txt");
    REQUIRE(back.predict(val.x).d == m.predict(val.x).d);
    REQUIRE(back.norm.theta[0].lo == nm.theta[0].lo);
    save_soh("soh_ck2.txt", back, cfg, rep);
    REQUIRE(hash_file("soh_ck.txt") == hash_file("soh_ck2.txt"));
}

TEST_CASE("capacity head training is seed-reproducible") {
    SohRows train = synthetic_rows(120, 31);
    SohRows val = synthetic_rows(30, 32);
    NormalizationSpec nm = NormalizationSpec::make(cell(), AgingRanges::defaults());
    SohTrainConfig cfg;
    cfg.seed = 13;
    cfg.max_epochs = 25;
    cfg.patience = 25;

    for (const char* path : {"soh_rep_a.txt", "soh_rep_b.txt"}) {
        Rng rng(stage_seed(cfg.seed, "soh-init"));
        SohModel m = SohModel::make(nm, rng);
        auto rep = train_soh(m, train, val, cfg);
        save_soh(path, m, cfg, rep);
    }
    REQUIRE(hash_file("soh_rep_a.txt") == hash_file("soh_rep_b.txt"));
}

TEST_CASE("estimation is deterministic and the freeze guard sees file changes") {
    NormalizationSpec nm = NormalizationSpec::make(cell(), AgingRanges::defaults());
    Rng rng(stage_seed(3, "ident-init"));
    auto ident = IdentifierModel::make(16, nm, rng);
    Rng rng2(stage_seed(3, "soh-init"));
    auto soh = SohModel::make(nm, rng2);

    Tensor window(1, 3 * 16);
    for (int c = 0; c < window.cols; ++c) window.at(0, c) = 0.1 + 0.8 * (c % 7) / 7.0;
    auto a = identify_and_estimate(ident, soh, window);
    auto b = identify_and_estimate(ident, soh, window);
    REQUIRE(a.soh == b.soh);
    REQUIRE(a.theta_norm == b.theta_norm);
    REQUIRE(a.soh > 0.0);
    REQUIRE(a.soh < 1.0);

    { std::ofstream f("frozen_probe.txt"); f << "weights"; }
    uint64_t h0 = hash_file("frozen_probe.txt");
    { std::ofstream f("frozen_probe.txt", std::ios::app); f << "!"; }
    REQUIRE(hash_file("frozen_probe.txt") != h0);
}

TEST_CASE("stage training leaves the identifier checkpoint untouched") {
    NormalizationSpec nm = NormalizationSpec::make(cell(), AgingRanges::defaults());
    Rng rng(stage_seed(17, "ident-init"));
    auto ident = IdentifierModel::make(16, nm, rng);
    IdentTrainConfig icfg;
    IdentReport irep;
    save_identifier("soh_stage_ident.txt", ident, icfg, irep);
    uint64_t h0 = hash_file("soh_stage_ident.txt");

    // tiny synthetic windows; labels are arbitrary smooth values
    WindowRows wtrain, wval;
    Rng wr(stage_seed(17, "soh-stage-windows"));
    auto fill = [&](WindowRows& w, int n) {
        w.k_points = 16;
        w.x = Tensor(n, 3 * 16);
        for (double& v : w.x.d) v = wr.uniform(0.1, 0.9);
        for (int i = 0; i < n; ++i) {
            w.sample_ids.push_back(i);
            w.soh_true.push_back(0.7 + 0.25 * wr.uniform());
            w.theta_true.push_back(AgingParams::fresh(cell()));
        }
    };
    fill(wtrain, 40);
    fill(wval, 10);

    SohTrainConfig cfg;
    cfg.seed = 17;
    cfg.max_epochs = 10;
    cfg.patience = 10;
    Rng rng2(stage_seed(17, "soh-init"));
    SohModel m = SohModel::make(nm, rng2);
    auto rep = train_soh_stage(m, "soh_stage_ident.txt", ident, wtrain, wval, cfg);
    REQUIRE(rep.epochs == 10);
    REQUIRE(hash_file("soh_stage_ident.txt") == h0);
}
