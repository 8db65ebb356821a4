#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>

#include "celldx/solver/boundaries.hpp"
#include "celldx/solver/dataset.hpp"
#include "celldx/solver/electrolyte.hpp"
#include "celldx/solver/lhs.hpp"
#include "celldx/solver/simulate.hpp"
#include "celldx/solver/solid.hpp"

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
} // namespace

TEST_CASE("solid particle conserves mass against the imposed flux") {
    SolidParticle part(1e-6, 3.9e-14, 30, 24291.0);
    double q = -8.9e-6;  // mol/m^2/s leaving
    double m0 = part.total_moles();
    for (int k = 1; k <= 500; ++k) {
        part.step(1.0, q);
        double expect = m0 + part.surface_area() * q * k;
        REQUIRE(part.total_moles() == Catch::Approx(expect).epsilon(1e-8));
    }
}

TEST_CASE("solid particle reaches the quasi-steady profile") {
    double R = 1e-6, D = 3.9e-14;
    SolidParticle part(R, D, 30, 24291.0);
    double q = -8.9e-6;
    // transient dies off over R^2/D ~ 26 s
    for (int k = 0; k < 300; ++k) part.step(1.0, q);
    double expect_gap = q / D * R / 5.0;  // surface minus volume average
    double gap = part.surface_conc(q) - part.average_conc();
    REQUIRE(gap == Catch::Approx(expect_gap).epsilon(0.01));

    // average falls at exactly the mass-balance rate once per step
    double a0 = part.average_conc();
    part.step(1.0, q);
    REQUIRE(part.average_conc() - a0 ==
            Catch::Approx(3.0 * q / R).epsilon(1e-10));
}

TEST_CASE("electrolyte conserves salt under load") {
    ElectrolyteGrid g(cell(), 20, 1200.0);
    double s0 = g.total_salt_per_area();
    for (int k = 0; k < 400; ++k) {
        g.step(1.0, 4.4);
        REQUIRE(g.total_salt_per_area() == Catch::Approx(s0).epsilon(1e-6));
    }
    REQUIRE(g.total_salt_per_area() == Catch::Approx(s0).epsilon(1e-12));
}

TEST_CASE("electrolyte relaxes to the analytic steady profile") {
    ElectrolyteGrid g(cell(), 20, 1200.0);
    for (int k = 0; k < 4000; ++k) g.step(1.0, 4.4);
    // piecewise-parabolic steady solution evaluated at the outermost cell
    // centers (computed independently from the flux-balance closed form)
    REQUIRE(g.boundary_neg() - 1200.0 ==
            Catch::Approx(164.4895083120023).epsilon(0.005));
    REQUIRE(g.boundary_pos() - 1200.0 ==
            Catch::Approx(-132.35374531150345).epsilon(0.005));
    // both ends stop moving
    double n_prev = g.boundary_neg(), p_prev = g.boundary_pos();
    g.step(1.0, 4.4);
    REQUIRE(std::abs(g.boundary_neg() - n_prev) < 1e-4);
    REQUIRE(std::abs(g.boundary_pos() - p_prev) < 1e-4);
}

TEST_CASE("window closure recovers the fresh corner stoichiometries") {
    auto r = derive_boundary_stoichiometry(cell().neg.x100, cell().pos.x0, cell(),
                                           ocp_neg(), ocp_pos());
    REQUIRE(r.ok);
    REQUIRE(r.x0_neg == Catch::Approx(0.0018).margin(1e-6));
    REQUIRE(r.x100_pos == Catch::Approx(0.016).margin(1e-6));
}

TEST_CASE("fresh cell discharge") {
    AgingParams fresh = AgingParams::fresh(cell());
    auto c = simulate_discharge(fresh, cell(), ocp_neg(), ocp_pos());
    REQUIRE(c.ok());
    REQUIRE(c.capacity_ah > 0.95);
    REQUIRE(c.capacity_ah < 1.07);
    // starts under load, below the rest value
    REQUIRE(c.points.front().t == 0.0);
    REQUIRE(c.points.front().v < cell().v_max);
    // lands on the cutoff
    REQUIRE(c.points.back().v == Catch::Approx(cell().v_min).margin(1e-5));
    // duration consistent with the 4.4 A draw
    REQUIRE(c.t_end == Catch::Approx(c.capacity_ah / 4.4 * 3600.0).epsilon(1e-12));
    // voltage decreases overall; small transient rebounds are physical while
    // the electrolyte profile develops, but stay under a millivolt
    for (std::size_t i = 1; i < c.points.size(); ++i)
        REQUIRE(c.points[i].v < c.points[i - 1].v + 1e-3);
    REQUIRE(c.points.back().v < c.points.front().v - 1.0);
}

TEST_CASE("aged cells lose capacity") {
    AgingParams worn = AgingParams::fresh(cell());
    worn.eps_s_neg = 0.46;
    worn.x100_neg = 0.70;
    REQUIRE(close_window(worn, cell(), ocp_neg(), ocp_pos()));
    auto c = simulate_discharge(worn, cell(), ocp_neg(), ocp_pos());
    auto f = simulate_discharge(AgingParams::fresh(cell()), cell(), ocp_neg(), ocp_pos());
    REQUIRE(c.ok());
    REQUIRE(c.capacity_ah < 0.92 * f.capacity_ah);
}

TEST_CASE("resampling is uniform and endpoint exact") {
    AgingParams fresh = AgingParams::fresh(cell());
    SolverOptions fast;
    fast.n_r = 16;
    fast.n_x = 10;
    auto c = simulate_discharge(fresh, cell(), ocp_neg(), ocp_pos(), fast);
    auto pts = resample_uniform(c, 128);
    REQUIRE(pts.size() == 128);
    REQUIRE(pts.front().t == 0.0);
    REQUIRE(pts.back().t == Catch::Approx(c.t_end).epsilon(1e-12));
    REQUIRE(pts.front().v == Catch::Approx(c.points.front().v).epsilon(1e-12));
    REQUIRE(pts.back().v == Catch::Approx(c.points.back().v).margin(1e-9));
    double dt = pts[1].t - pts[0].t;
    for (std::size_t i = 1; i < pts.size(); ++i)
        REQUIRE(pts[i].t - pts[i - 1].t == Catch::Approx(dt).epsilon(1e-9));
}

TEST_CASE("latin hypercube stratifies every axis") {
    Rng rng(stage_seed(42, "lhs-test"));
    int n = 64;
    auto pts = latin_hypercube(n, 4, rng);
    for (int d = 0; d < 4; ++d) {
        std::vector<int> hits(n, 0);
        for (int i = 0; i < n; ++i) {
            REQUIRE(pts[i][d] >= 0.0);
            REQUIRE(pts[i][d] < 1.0);
            hits[static_cast<int>(pts[i][d] * n)]++;
        }
        for (int s = 0; s < n; ++s) REQUIRE(hits[s] == 1);
    }
}

TEST_CASE("dataset build round trips through the loaders") {
    namespace fs = std::filesystem;
    std::string dir = "ds_test";
    fs::remove_all(dir);

    DatasetOptions opt;
    opt.n = 12;
    opt.seed = 7;
    opt.solver.n_r = 16;
    opt.solver.n_x = 10;
    auto stats = build_dataset(opt, cell(), AgingRanges::defaults(), ocp_neg(),
                               ocp_pos(), dir);
    REQUIRE(stats.n_total == 12);
    REQUIRE(stats.fresh_capacity_ah > 0.95);

    auto manifest = load_manifest(dir);
    REQUIRE(manifest.size() == 12);
    int kept = 0;
    for (const auto& s : manifest) {
        if (s.filtered) continue;
        ++kept;
        REQUIRE(s.soh > 0.60);
        REQUIRE(s.soh < 1.02);
        REQUIRE(s.duration_s >= 60.0);
        auto series = load_series(dir, s.id);
        REQUIRE(series.size() == 128);
        REQUIRE(series.front().t_norm == 0.0);
        REQUIRE(series.back().t_norm == 1.0);
        REQUIRE(series.front().current_a == 4.4);
        // voltage stays in the operating window
        for (const auto& q : series) {
            REQUIRE(q.voltage_v <= cell().v_max + 1e-9);
            REQUIRE(q.voltage_v >= cell().v_min - 1e-6);
        }
        // window invariants of the stored parameters
        REQUIRE(s.theta.x100_neg > s.theta.x0_neg);
        REQUIRE(s.theta.x0_pos > s.theta.x100_pos);
    }
    REQUIRE(kept >= 9);  // nearly all of the box is feasible
    fs::remove_all(dir);
}
