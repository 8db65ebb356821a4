#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "celldx/pipeline/cli.hpp"

using namespace celldx;

namespace {

int run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "celldx");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return cli_main(static_cast<int>(argv.size()), argv.data());
}

const std::string kCfgPath = "pipe.cfg";
const std::string kDataDir = "pipe_ds";
const std::string kModelDir = "pipe_models";

void write_tiny_cfg() {
    std::ofstream f(kCfgPath);
    f << "seed = 5\n"
         "trials = 2\n"
         "data.n = 14\n"
         "data.k = 16\n"
         "solver.dt = 2\n"
         "solver.n_r = 16\n"
         "solver.n_x = 10\n"
         "surrogate.epochs = 30\n"
         "surrogate.patience = 30\n"
         "ident.epochs = 6\n"
         "ident.patience = 6\n"
         "soh.epochs = 40\n"
         "soh.patience = 40\n";
}

// stages build on each other, so the fixture runs the front end once
bool build_fixture() {
    static bool done = [] {
        write_tiny_cfg();
        std::filesystem::remove_all(kDataDir);
        std::filesystem::remove_all(kModelDir);
        REQUIRE(run_cli({"gen-data", "--config", kCfgPath, "--out", kDataDir}) == 0);
        REQUIRE(run_cli({"train", "surrogate", "--config", kCfgPath, "--data", kDataDir,
                         "--out", kModelDir}) == 0);
        REQUIRE(run_cli({"train", "ident", "--config", kCfgPath, "--data", kDataDir, "--out",
                         kModelDir}) == 0);
        REQUIRE(run_cli({"train", "soh", "--config", kCfgPath, "--data", kDataDir, "--out",
                         kModelDir}) == 0);
        return true;
    }();
    return done;
}

} // namespace

TEST_CASE("configuration keys parse into the run") {
    RunConfig cfg;
    std::map<std::string, std::string> kv = {{"seed", "18446744073709551615"},
                                             {"data.n", "42"},
                                             {"split.ratio", "0.75"},
                                             {"solver.c_rate", "2.5"},
                                             {"surrogate.lambda_p", "0.1"},
                                             {"ident.lr", "0.002"}};
    cfg.apply(kv, "test");
    CHECK(cfg.seed == 18446744073709551615ull);
    CHECK(cfg.n_samples == 42);
    CHECK(cfg.split_ratio == 0.75);
    CHECK(cfg.c_rate == 2.5);
    CHECK(cfg.surrogate.lambda_phys == 0.1);
    CHECK(cfg.ident.lr == 0.002);
    cfg.validate("test");

    auto rejects = [](std::map<std::string, std::string> bad) {
        RunConfig c;
        CHECK_THROWS_AS(c.apply(bad, "test"), SchemaError);
    };
    rejects({{"bogus.key", "1"}});
    rejects({{"data.n", "2.5"}});
    rejects({{"seed", "12x"}});

    RunConfig bad;
    bad.k_points = 8; // too short for two pooled convolutions
    CHECK_THROWS_AS(bad.validate("test"), SchemaError);
    bad = RunConfig{};
    bad.split_ratio = 1.0;
    CHECK_THROWS_AS(bad.validate("test"), SchemaError);
}

TEST_CASE("root seed fans out to every stage") {
    RunConfig cfg;
    cfg.set_seed(99);
    CHECK(cfg.seed == 99);
    CHECK(cfg.surrogate.seed == 99);
    CHECK(cfg.ident.seed == 99);
    CHECK(cfg.soh.seed == 99);
}

TEST_CASE("resolved snapshot round trips through the loader") {
    RunConfig cfg;
    cfg.set_seed(7);
    cfg.n_samples = 33;
    cfg.soh.lr = 0.0005;
    cfg.write_snapshot("pipe_snap");

    RunConfig back;
    back.load_file("pipe_snap/run.cfg");
    std::ostringstream a, b;
    cfg.write(a);
    back.write(b);
    CHECK(a.str() == b.str());
}

TEST_CASE("usage errors exit with code 1") {
    CHECK(run_cli({}) == 1);
    CHECK(run_cli({"train", "bogus"}) == 1);
    CHECK(run_cli({"gen-data", "--n", "0"}) == 1);
    CHECK(run_cli({"identify", "no_such_window.csv"}) == 1);
}

TEST_CASE("stages must run in order") {
    build_fixture();
    std::filesystem::create_directories("pipe_empty");
    CHECK(run_cli({"train", "ident", "--config", kCfgPath, "--data", kDataDir, "--out",
                   "pipe_empty"}) == 3);
    CHECK(run_cli({"train", "soh", "--config", kCfgPath, "--data", kDataDir, "--out",
                   "pipe_empty"}) == 3);
    CHECK(run_cli({"train", "surrogate", "--config", kCfgPath, "--data", "pipe_no_ds",
                   "--out", "pipe_empty"}) == 3);
}

TEST_CASE("malformed window files are schema errors") {
    build_fixture();
    {
        std::ofstream f("pipe_bad.csv");
        f << "wrong,header\n1,2\n";
    }
    CHECK(run_cli({"identify", "pipe_bad.csv", "--config", kCfgPath, "--models", kModelDir,
                   "--out", "pipe_out_bad"}) == 2);
    {
        std::ofstream f("pipe_bad2.csv");
        f << kSeriesHeader << "\n"
          << "0,0,4.4,3.3,1,1,1,1\n"
          << "1,0,4.4,3.3,1,1,1,1\n"; // t_norm stalls
    }
    CHECK(run_cli({"identify", "pipe_bad2.csv", "--config", kCfgPath, "--models", kModelDir,
                   "--out", "pipe_out_bad"}) == 2);
}

TEST_CASE("numerical failures exit with code 4") {
    {
        std::ofstream f("pipe_short.cfg");
        f << "data.n = 3\nsolver.t_max = 10\n";
    }
    CHECK(run_cli({"gen-data", "--config", "pipe_short.cfg", "--out", "pipe_short_ds"}) == 4);
}

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    REQUIRE(f.good());
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

TEST_CASE("trained artifacts and reports land on disk") {
    build_fixture();
    for (const char* f : {"surrogate_css_neg.txt", "surrogate_css_pos.txt", "surrogate_ce0.txt",
                          "surrogate_ceL.txt", "identifier.txt", "soh_head.txt",
                          "surrogate_report.csv", "identifier_report.csv", "soh_report.csv",
                          "soh_trials.csv", "run.cfg"})
        CHECK(std::filesystem::exists(kModelDir + "/" + f));

    std::string trials = slurp(kModelDir + "/soh_trials.csv");
    CHECK(trials.rfind(kMetricsHeader, 0) == 0);
    CHECK(trials.find("soh,1,val_rmse,") != std::string::npos);
    CHECK(trials.find("soh,2,val_rmse,") != std::string::npos);
    CHECK(trials.find("val_rmse_mean") != std::string::npos);
}

TEST_CASE("retraining a stage rewrites identical bytes") {
    build_fixture();
    auto h1 = hash_file(kModelDir + "/identifier.txt");
    auto s1 = hash_file(kModelDir + "/surrogate_css_neg.txt");
    REQUIRE(run_cli({"train", "ident", "--config", kCfgPath, "--data", kDataDir, "--out",
                     kModelDir}) == 0);
    CHECK(hash_file(kModelDir + "/identifier.txt") == h1);
    CHECK(hash_file(kModelDir + "/surrogate_css_neg.txt") == s1);
}

TEST_CASE("evaluation writes the metric table") {
    build_fixture();
    REQUIRE(run_cli({"eval", "--config", kCfgPath, "--data", kDataDir, "--models", kModelDir,
                     "--out", "pipe_eval"}) == 0);
    std::string body = slurp("pipe_eval/metrics.csv");
    CHECK(body.rfind(kMetricsHeader, 0) == 0);
    for (const char* m : {"css_neg_rmse_mol_m3", "eps_s_neg_rmse", "recon_rmse_v", "soh,0,rmse",
                          "identify_estimate_ms_mean", "op_count_per_window"})
        CHECK(body.find(m) != std::string::npos);

    auto theta = read_numeric_csv("pipe_eval/theta.csv");
    CHECK(theta.rows.size() >= 2);     // held-out samples
    CHECK(theta.rows[0].size() == 13); // id + six true + six predicted
}

TEST_CASE("identification round trips a generated window") {
    build_fixture();
    auto manifest = load_manifest(kDataDir);
    std::string series;
    for (const auto& s : manifest)
        if (!s.filtered) {
            series = kDataDir + "/series/" + series_file_name(s.id);
            break;
        }
    REQUIRE(!series.empty());
    REQUIRE(run_cli({"identify", series, "--config", kCfgPath, "--models", kModelDir, "--out",
                     "pipe_id"}) == 0);

    std::ifstream f("pipe_id/theta.csv");
    std::string header, line;
    REQUIRE(std::getline(f, header));
    CHECK(header == pipeline::theta_csv_pred_header());
    REQUIRE(std::getline(f, line));
    auto fields = split_csv_line(line);
    REQUIRE(fields.size() == 8); // window name, six parameters, fit error
    CHECK(fields[0] == std::filesystem::path(series).filename().string());
    // predictions live inside the sampling box; reconstruction error is finite
    AgingRanges box = AgingRanges::defaults();
    for (size_t a = 0; a < static_cast<size_t>(AgingParams::kDim); ++a) {
        double v = parse_double(fields[a + 1], "theta.csv");
        CHECK(v >= box.lo[a] - 1e-12);
        CHECK(v <= box.hi[a] + 1e-12);
    }
    CHECK(parse_double(fields[7], "theta.csv") < 1.0);

    REQUIRE(run_cli({"estimate", series, "--config", kCfgPath, "--models", kModelDir, "--data",
                     kDataDir, "--out", "pipe_est"}) == 0);
    auto soh = read_numeric_csv("pipe_est/soh.csv", "sample_id,soh_true,soh_pred,abs_err");
    REQUIRE(soh.rows.size() == 1);
    CHECK(soh.rows[0][2] > 0.0);
    CHECK(soh.rows[0][2] < 1.0);
    CHECK(soh.rows[0][3] == Catch::Approx(std::abs(soh.rows[0][1] - soh.rows[0][2])));
}

TEST_CASE("resampling preserves straight lines and the network layout") {
    std::vector<SeriesPoint> pts;
    for (int i = 0; i < 40; ++i) {
        double tn = i / 39.0;
        pts.push_back({tn * 600.0, tn, 4.4, 3.3 - 0.8 * tn, 0, 0, 0, 0});
    }
    auto rs = pipeline::resample_window(pts, 16);
    REQUIRE(rs.size() == 16);
    for (int j = 0; j < 16; ++j) {
        double tn = j / 15.0;
        CHECK(rs[static_cast<size_t>(j)].t_norm == Catch::Approx(tn).margin(1e-12));
        CHECK(rs[static_cast<size_t>(j)].voltage_v ==
              Catch::Approx(3.3 - 0.8 * tn).margin(1e-9));
    }

    // the flattened row must match what the training assembler produces
    build_fixture();
    IdentifierModel ident = load_identifier(pipeline::identifier_path(kModelDir));
    auto manifest = load_manifest(kDataDir);
    int id = -1;
    for (const auto& s : manifest)
        if (!s.filtered) {
            id = s.id;
            break;
        }
    WindowRows w = assemble_windows(kDataDir, ident.norm, {id});
    auto file_pts = load_series(kDataDir, id);
    Tensor x = pipeline::window_row(pipeline::resample_window(file_pts, ident.k_points),
                                    ident.norm);
    REQUIRE(x.cols == w.x.cols);
    for (int c = 0; c < x.cols; ++c)
        CHECK(x.at(0, c) == Catch::Approx(w.x.at(0, c)).margin(1e-9));
}

TEST_CASE("per window cost counts the whole stack") {
    CHECK(pipeline::ops_per_window(128) == 352256.0);
}
