#pragma once

#include <array>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>

#include "celldx/params.hpp"

namespace celldx {

// Affine min-max map for one channel. No clamping: out-of-range inputs map
// outside [0,1] and still round-trip.
struct Channel {
    double lo = 0.0, hi = 1.0;
    double to_unit(double v) const { return (v - lo) / (hi - lo); }
    double from_unit(double u) const { return lo + u * (hi - lo); }
    double width() const { return hi - lo; }
};

// Fixed normalization ranges shared by dataset files, checkpoints and every
// network input/output. Built once from the cell parameters and sampling box.
struct NormalizationSpec {
    std::array<Channel, AgingParams::kDim> theta;
    Channel current;   // [0, 6C * nominal capacity]
    Channel time;      // identity on [0, 1]
    Channel voltage;   // [v_min, v_max]
    Channel css_neg;   // [0, c_s_max-]
    Channel css_pos;   // [0, c_s_max+]
    Channel ce;        // [0, 2 * c_e0], both liquid boundaries

    static NormalizationSpec make(const CellParams& cell, const AgingRanges& box) {
        NormalizationSpec s;
        for (int i = 0; i < AgingParams::kDim; ++i)
            s.theta[i] = {box.lo[i], box.hi[i]};
        s.current = {0.0, 6.0 * cell.q_nominal};
        s.time = {0.0, 1.0};
        s.voltage = {cell.v_min, cell.v_max};
        s.css_neg = {0.0, cell.neg.c_s_max};
        s.css_pos = {0.0, cell.pos.c_s_max};
        s.ce = {0.0, 2.0 * cell.c_e0};
        return s;
    }

    std::array<double, AgingParams::kDim> theta_to_unit(const AgingParams& t) const {
        auto a = t.to_array();
        std::array<double, AgingParams::kDim> u{};
        for (int i = 0; i < AgingParams::kDim; ++i) u[i] = theta[i].to_unit(a[i]);
        return u;
    }
    AgingParams theta_from_unit(const std::array<double, AgingParams::kDim>& u) const {
        std::array<double, AgingParams::kDim> a{};
        for (int i = 0; i < AgingParams::kDim; ++i) a[i] = theta[i].from_unit(u[i]);
        return AgingParams::from_array(a);
    }

    void to_extras(std::map<std::string, std::string>& kv) const {
        auto w = [&](const std::string& k, const Channel& c) {
            kv["norm." + k + ".lo"] = format_double(c.lo);
            kv["norm." + k + ".hi"] = format_double(c.hi);
        };
        for (int i = 0; i < AgingParams::kDim; ++i)
            w(AgingParams::names()[i], theta[i]);
        w("current", current);
        w("time", time);
        w("voltage", voltage);
        w("css_neg", css_neg);
        w("css_pos", css_pos);
        w("ce", ce);
    }

    void write(std::ostream& os) const {
        std::map<std::string, std::string> kv;
        to_extras(kv);
        for (const auto& [k, v] : kv) os << k << " = " << v << "\n";
    }

    static NormalizationSpec parse(std::map<std::string, std::string>& kv,
                                   const std::string& where) {
        NormalizationSpec s;
        auto r = [&](const std::string& k, Channel& c) {
            for (auto [suffix, field] : {std::make_pair(".lo", &c.lo),
                                         std::make_pair(".hi", &c.hi)}) {
                auto it = kv.find("norm." + k + suffix);
                if (it == kv.end())
                    throw SchemaError(where + ": missing normalization key norm." + k + suffix);
                *field = parse_double(it->second, where);
                kv.erase(it);
            }
            if (!(c.hi > c.lo))
                throw SchemaError(where + ": normalization range for " + k + " is empty");
        };
        for (int i = 0; i < AgingParams::kDim; ++i)
            r(AgingParams::names()[i], s.theta[i]);
        r("current", s.current);
        r("time", s.time);
        r("voltage", s.voltage);
        r("css_neg", s.css_neg);
        r("css_pos", s.css_pos);
        r("ce", s.ce);
        return s;
    }
};

} // namespace celldx
