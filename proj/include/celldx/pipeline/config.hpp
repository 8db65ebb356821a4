#pragma once

#include <map>
#include <ostream>
#include <stdexcept>
#include <string>

#include "celldx/nets/soh.hpp"
#include "celldx/solver/dataset.hpp"

namespace celldx {

// A pipeline stage was invoked before the stage that produces its inputs.
struct OrderingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Everything a run needs, materialized. A serialized copy lands next to every
// command's outputs so any result directory states how it was produced.
struct RunConfig {
    uint64_t seed = 1;
    int trials = 5;
    double split_ratio = 0.8;

    int n_samples = 500;
    int k_points = 128;
    double min_duration_s = 60.0;
    std::string data_dir = "out/dataset";
    std::string model_dir = "out/models";

    double dt = 1.0;
    int n_r = 30;
    int n_x = 20;
    double t_max = 7200.0;
    double c_rate = 4.0;

    SurrogateTrainConfig surrogate;
    IdentTrainConfig ident;
    SohTrainConfig soh;

    SolverOptions solver(const CellParams& p) const {
        SolverOptions o;
        o.dt = dt;
        o.n_r = n_r;
        o.n_x = n_x;
        o.t_max = t_max;
        o.current = c_rate * p.q_nominal;
        return o;
    }

    DatasetOptions dataset(const CellParams& p) const {
        DatasetOptions o;
        o.n = n_samples;
        o.seed = seed;
        o.k_points = k_points;
        o.min_duration_s = min_duration_s;
        o.solver = solver(p);
        return o;
    }

    // Root seed fans out to every stage unless a stage key pins its own.
    void set_seed(uint64_t s) {
        seed = s;
        surrogate.seed = s;
        ident.seed = s;
        soh.seed = s;
    }

    void apply(std::map<std::string, std::string>& kv, const std::string& where) {
        auto num = [&](const char* key, double& field) {
            auto it = kv.find(key);
            if (it == kv.end()) return;
            field = parse_double(it->second, where);
            kv.erase(it);
        };
        auto count = [&](const char* key, auto& field) {
            auto it = kv.find(key);
            if (it == kv.end()) return;
            double v = parse_double(it->second, where);
            if (v < 0 || v != std::floor(v))
                throw SchemaError(where + ": " + key + " must be a whole number, got " +
                                  it->second);
            field = static_cast<std::decay_t<decltype(field)>>(v);
            kv.erase(it);
        };
        auto text = [&](const char* key, std::string& field) {
            auto it = kv.find(key);
            if (it == kv.end()) return;
            field = it->second;
            kv.erase(it);
        };
        auto u64 = [&](const char* key, uint64_t& field) {
            auto it = kv.find(key);
            if (it == kv.end()) return;
            try {
                size_t used = 0;
                field = std::stoull(it->second, &used);
                if (used != it->second.size()) throw std::invalid_argument("");
            } catch (const std::exception&) {
                throw SchemaError(where + ": " + key + " must be an unsigned integer, got " +
                                  it->second);
            }
            kv.erase(it);
        };

        uint64_t root = seed;
        u64("seed", root);
        if (root != seed) set_seed(root);

        count("trials", trials);
        num("split.ratio", split_ratio);
        count("data.n", n_samples);
        count("data.k", k_points);
        num("data.min_duration_s", min_duration_s);
        text("data.dir", data_dir);
        text("models.dir", model_dir);

        num("solver.dt", dt);
        count("solver.n_r", n_r);
        count("solver.n_x", n_x);
        num("solver.t_max", t_max);
        num("solver.c_rate", c_rate);

        num("surrogate.lr", surrogate.lr);
        count("surrogate.batch", surrogate.batch);
        count("surrogate.epochs", surrogate.max_epochs);
        count("surrogate.patience", surrogate.patience);
        num("surrogate.lambda_d", surrogate.lambda_data);
        num("surrogate.lambda_p", surrogate.lambda_phys);
        u64("surrogate.seed", surrogate.seed);

        num("ident.lr", ident.lr);
        count("ident.batch", ident.batch);
        count("ident.epochs", ident.max_epochs);
        count("ident.patience", ident.patience);
        u64("ident.seed", ident.seed);

        num("soh.lr", soh.lr);
        count("soh.batch", soh.batch);
        count("soh.epochs", soh.max_epochs);
        count("soh.patience", soh.patience);
        u64("soh.seed", soh.seed);

        if (!kv.empty())
            throw SchemaError(where + ": unknown configuration key '" + kv.begin()->first +
                              "'");
        validate(where);
    }

    void validate(const std::string& where) const {
        auto bad = [&](const std::string& what) {
            throw SchemaError(where + ": " + what);
        };
        if (n_samples <= 0) bad("data.n must be positive");
        if (k_points < 12) bad("data.k must be at least 12 for the pooled convolution stack");
        if (!(split_ratio > 0.0 && split_ratio < 1.0)) bad("split.ratio must be in (0,1)");
        if (trials <= 0) bad("trials must be positive");
        if (!(dt > 0.0)) bad("solver.dt must be positive");
        if (n_r < 2 || n_x < 2) bad("solver grids need at least 2 cells");
        if (!(c_rate > 0.0)) bad("solver.c_rate must be positive");
    }

    void load_file(const std::string& path) {
        auto kv = read_kv_file(path);
        apply(kv, path);
    }

    void write(std::ostream& os) const {
        os << "seed = " << seed << "\n";
        os << "trials = " << trials << "\n";
        os << "split.ratio = " << format_double(split_ratio) << "\n";
        os << "data.n = " << n_samples << "\n";
        os << "data.k = " << k_points << "\n";
        os << "data.min_duration_s = " << format_double(min_duration_s) << "\n";
        os << "data.dir = " << data_dir << "\n";
        os << "models.dir = " << model_dir << "\n";
        os << "solver.dt = " << format_double(dt) << "\n";
        os << "solver.n_r = " << n_r << "\n";
        os << "solver.n_x = " << n_x << "\n";
        os << "solver.t_max = " << format_double(t_max) << "\n";
        os << "solver.c_rate = " << format_double(c_rate) << "\n";
        os << "surrogate.lr = " << format_double(surrogate.lr) << "\n";
        os << "surrogate.batch = " << surrogate.batch << "\n";
        os << "surrogate.epochs = " << surrogate.max_epochs << "\n";
        os << "surrogate.patience = " << surrogate.patience << "\n";
        os << "surrogate.lambda_d = " << format_double(surrogate.lambda_data) << "\n";
        os << "surrogate.lambda_p = " << format_double(surrogate.lambda_phys) << "\n";
        os << "surrogate.seed = " << surrogate.seed << "\n";
        os << "ident.lr = " << format_double(ident.lr) << "\n";
        os << "ident.batch = " << ident.batch << "\n";
        os << "ident.epochs = " << ident.max_epochs << "\n";
        os << "ident.patience = " << ident.patience << "\n";
        os << "ident.seed = " << ident.seed << "\n";
        os << "soh.lr = " << format_double(soh.lr) << "\n";
        os << "soh.batch = " << soh.batch << "\n";
        os << "soh.epochs = " << soh.max_epochs << "\n";
        os << "soh.patience = " << soh.patience << "\n";
        os << "soh.seed = " << soh.seed << "\n";
    }

    void write_snapshot(const std::string& dir) const {
        std::filesystem::create_directories(dir);
        std::ofstream f(dir + "/run.cfg");
        if (!f) throw std::runtime_error("cannot write " + dir + "/run.cfg");
        f << "# resolved configuration\n";
        write(f);
    }
};

} // namespace celldx
