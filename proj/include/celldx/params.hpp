#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <string>

#include "celldx/constants.hpp"
#include "celldx/io/csv.hpp"

namespace celldx {

enum class Electrode { Negative, Positive };

struct ElectrodeParams {
    double thickness;        // m
    double particle_radius;  // m
    double eps_s;            // active-material volume fraction
    double eps_e;            // electrolyte volume fraction
    double d_s;              // solid diffusivity, m^2/s
    double c_s_max;          // mol/m^3
    double k0;               // reaction rate constant
    double x100;             // stoichiometry at full charge
    double x0;               // stoichiometry at full discharge
};

struct CellParams {
    double area;             // electrode plate area, m^2
    ElectrodeParams neg, pos;
    double sep_thickness;    // m
    double sep_eps_e;
    double c_e0;             // initial electrolyte concentration, mol/m^3
    double t_plus;           // cation transference number
    double d_e;              // bulk electrolyte diffusivity, m^2/s
    double kappa;            // bulk ionic conductivity, S/m
    double brug;             // Bruggeman exponent
    double temperature;      // K
    double v_min, v_max;     // operating window, V
    double q_nominal;        // Ah

    const ElectrodeParams& el(Electrode e) const {
        return e == Electrode::Negative ? neg : pos;
    }

    static CellParams fresh() {
        CellParams p{};
        p.area = 0.087;
        p.neg = {3.5e-5, 1e-6, 0.54, 0.40, 3.9e-14, 30555.0, 3e-11, 0.795, 0.0018};
        p.pos = {6e-5, 2e-6, 0.373, 0.44, 8e-14, 22806.0, 1.4e-12, 0.016, 0.89};
        p.sep_thickness = 2e-5;
        p.sep_eps_e = 0.54;
        p.c_e0 = 1200.0;
        p.t_plus = 0.363;
        p.d_e = 2.5e-10;
        p.kappa = 1.0;
        p.brug = 1.5;
        p.temperature = kTempRef;
        p.v_min = 2.0;
        p.v_max = 3.6;
        p.q_nominal = 1.1;
        return p;
    }
};

// The six aging parameters, in canonical order:
// eps_s_neg, eps_s_pos, x100_neg, x0_neg, x100_pos, x0_pos.
struct AgingParams {
    double eps_s_neg, eps_s_pos;
    double x100_neg, x0_neg;
    double x100_pos, x0_pos;

    static constexpr int kDim = 6;
    std::array<double, kDim> to_array() const {
        return {eps_s_neg, eps_s_pos, x100_neg, x0_neg, x100_pos, x0_pos};
    }
    static AgingParams from_array(const std::array<double, kDim>& a) {
        return {a[0], a[1], a[2], a[3], a[4], a[5]};
    }
    static AgingParams fresh(const CellParams& c) {
        return {c.neg.eps_s, c.pos.eps_s, c.neg.x100, c.neg.x0, c.pos.x100, c.pos.x0};
    }
    static const std::array<const char*, kDim>& names() {
        static const std::array<const char*, kDim> n = {
            "eps_s_neg", "eps_s_pos", "x100_neg", "x0_neg", "x100_pos", "x0_pos"};
        return n;
    }
};

// Feasible sampling box for the aging parameters.
struct AgingRanges {
    std::array<double, AgingParams::kDim> lo, hi;

    static AgingRanges defaults() {
        AgingRanges r;
        r.lo = {0.45, 0.34, 0.68, 0.0015, 0.015, 0.70};
        r.hi = {0.54, 0.40, 0.80, 0.0020, 0.016, 0.90};
        return r;
    }
    bool contains(const AgingParams& t) const {
        auto a = t.to_array();
        for (int i = 0; i < AgingParams::kDim; ++i)
            if (a[i] < lo[i] || a[i] > hi[i]) return false;
        return true;
    }
};

// ---------------------------------------------------------------------------
// key = value configuration text

inline std::map<std::string, std::string> read_kv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError(path + ": cannot open");
    std::map<std::string, std::string> kv;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        size_t h = line.find('#');
        if (h != std::string::npos) line = line.substr(0, h);
        size_t b = line.find_first_not_of(" \t");
        if (b == std::string::npos) continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw SchemaError(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
        auto trim = [](std::string s) {
            size_t a = s.find_first_not_of(" \t");
            size_t z = s.find_last_not_of(" \t");
            return a == std::string::npos ? std::string() : s.substr(a, z - a + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw SchemaError(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
        kv[key] = val;
    }
    return kv;
}

// Applies cell-parameter overrides from a key/value map and erases consumed
// keys, so callers can detect leftovers. Keys mirror the field names,
// e.g. "neg.eps_s = 0.54".
inline void apply_cell_overrides(CellParams& p, std::map<std::string, std::string>& kv,
                                 const std::string& where) {
    auto bind = [&](const std::string& key, double& field) {
        auto it = kv.find(key);
        if (it == kv.end()) return;
        field = parse_double(it->second, where + " [" + key + "]");
        kv.erase(it);
    };
    bind("area", p.area);
    for (auto side : {std::make_pair(std::string("neg."), &p.neg),
                      std::make_pair(std::string("pos."), &p.pos)}) {
        ElectrodeParams* e = side.second;
        bind(side.first + "thickness", e->thickness);
        bind(side.first + "particle_radius", e->particle_radius);
        bind(side.first + "eps_s", e->eps_s);
        bind(side.first + "eps_e", e->eps_e);
        bind(side.first + "d_s", e->d_s);
        bind(side.first + "c_s_max", e->c_s_max);
        bind(side.first + "k0", e->k0);
        bind(side.first + "x100", e->x100);
        bind(side.first + "x0", e->x0);
    }
    bind("sep.thickness", p.sep_thickness);
    bind("sep.eps_e", p.sep_eps_e);
    bind("c_e0", p.c_e0);
    bind("t_plus", p.t_plus);
    bind("d_e", p.d_e);
    bind("kappa", p.kappa);
    bind("brug", p.brug);
    bind("temperature", p.temperature);
    bind("v_min", p.v_min);
    bind("v_max", p.v_max);
    bind("q_nominal", p.q_nominal);
}

inline void write_cell_params(std::ostream& os, const CellParams& p) {
    auto w = [&](const std::string& k, double v) {
        os << k << " = " << format_double(v) << "\n";
    };
    w("area", p.area);
    const ElectrodeParams* els[2] = {&p.neg, &p.pos};
    const char* pre[2] = {"neg.", "pos."};
    for (int i = 0; i < 2; ++i) {
        std::string s = pre[i];
        w(s + "thickness", els[i]->thickness);
        w(s + "particle_radius", els[i]->particle_radius);
        w(s + "eps_s", els[i]->eps_s);
        w(s + "eps_e", els[i]->eps_e);
        w(s + "d_s", els[i]->d_s);
        w(s + "c_s_max", els[i]->c_s_max);
        w(s + "k0", els[i]->k0);
        w(s + "x100", els[i]->x100);
        w(s + "x0", els[i]->x0);
    }
    w("sep.thickness", p.sep_thickness);
    w("sep.eps_e", p.sep_eps_e);
    w("c_e0", p.c_e0);
    w("t_plus", p.t_plus);
    w("d_e", p.d_e);
    w("kappa", p.kappa);
    w("brug", p.brug);
    w("temperature", p.temperature);
    w("v_min", p.v_min);
    w("v_max", p.v_max);
    w("q_nominal", p.q_nominal);
}

} // namespace celldx
