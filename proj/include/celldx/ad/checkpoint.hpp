#pragma once

// Text checkpoints: tag line, architecture line, one comma-separated line of
// weights-then-bias per layer, then key = value extras (normalization spec,
// residual scaling, trial metadata). Floats use shortest-round-trip form so a
// write/read cycle is exact and files diff cleanly.

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "celldx/ad/layers.hpp"
#include "celldx/ad/mlp.hpp"
#include "celldx/io/csv.hpp"

namespace celldx {

struct Checkpoint {
    std::string tag;
    std::string arch;
    std::vector<std::vector<double>> layer_data;
    std::map<std::string, std::string> extras;
};

inline void write_checkpoint(const std::string& path, const Checkpoint& cp) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    out << cp.tag << "\n" << cp.arch << "\n";
    for (const auto& layer : cp.layer_data) {
        for (size_t i = 0; i < layer.size(); ++i)
            out << (i ? "," : "") << format_double(layer[i]);
        out << "\n";
    }
    for (const auto& [k, v] : cp.extras) out << k << " = " << v << "\n";
}

inline Checkpoint read_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError(path + ": cannot open");
    Checkpoint cp;
    std::string line;
    if (!std::getline(in, cp.tag) || cp.tag.empty())
        throw SchemaError(path + ": missing tag line");
    if (!std::getline(in, cp.arch) || cp.arch.empty())
        throw SchemaError(path + ": missing architecture line");
    size_t lineno = 2;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line.find('=') != std::string::npos) {
            auto eq = line.find('=');
            std::string k = line.substr(0, eq), v = line.substr(eq + 1);
            auto trim = [](std::string& s) {
                s.erase(0, s.find_first_not_of(" \t"));
                s.erase(s.find_last_not_of(" \t") + 1);
            };
            trim(k);
            trim(v);
            if (k.empty()) throw SchemaError(path + ":" + std::to_string(lineno) +
                                             ": empty key");
            cp.extras[k] = v;
            continue;
        }
        std::vector<double> vals;
        size_t start = 0;
        while (start <= line.size()) {
            size_t comma = line.find(',', start);
            std::string tok = line.substr(
                start, comma == std::string::npos ? std::string::npos : comma - start);
            vals.push_back(parse_double(tok, path + ":" + std::to_string(lineno)));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        cp.layer_data.push_back(std::move(vals));
    }
    return cp;
}

// --- dense stacks -----------------------------------------------------------

inline std::string mlp_arch(const Mlp& m) {
    std::ostringstream os;
    for (size_t i = 0; i < m.layers.size(); ++i) {
        const auto& l = m.layers[i];
        os << (i ? ";" : "") << "dense " << l.w.rows << " " << l.w.cols << " "
           << activation_name(l.act);
    }
    return os.str();
}

inline std::vector<double> pack_layer(const Tensor& w, const Tensor& b) {
    std::vector<double> out = w.d;
    out.insert(out.end(), b.d.begin(), b.d.end());
    return out;
}

inline void unpack_layer(Tensor& w, Tensor& b, const std::vector<double>& flat,
                         const std::string& where) {
    if (flat.size() != w.size() + b.size())
        throw SchemaError(where + ": layer size mismatch");
    std::copy(flat.begin(), flat.begin() + w.size(), w.d.begin());
    std::copy(flat.begin() + w.size(), flat.end(), b.d.begin());
}

inline std::vector<std::vector<double>> pack_mlp(const Mlp& m) {
    std::vector<std::vector<double>> out;
    for (const auto& l : m.layers) out.push_back(pack_layer(l.w, l.b));
    return out;
}

// rebuild the stack described by an arch string, filling weights from data
inline Mlp unpack_mlp(const std::string& arch,
                      const std::vector<std::vector<double>>& data,
                      const std::string& where) {
    Mlp m;
    std::istringstream segs(arch);
    std::string seg;
    while (std::getline(segs, seg, ';')) {
        std::istringstream ss(seg);
        std::string kind, act;
        int in = 0, out = 0;
        ss >> kind >> in >> out >> act;
        if (!ss || kind != "dense" || in <= 0 || out <= 0)
            throw SchemaError(where + ": bad layer descriptor '" + seg + "'");
        DenseLayer l;
        l.w = Tensor(in, out);
        l.b = Tensor(1, out);
        l.act = activation_from(act);
        m.layers.push_back(std::move(l));
    }
    if (m.layers.empty()) throw SchemaError(where + ": empty architecture");
    if (data.size() != m.layers.size())
        throw SchemaError(where + ": expected " + std::to_string(m.layers.size()) +
                          " layer lines, got " + std::to_string(data.size()));
    for (size_t i = 0; i < data.size(); ++i)
        unpack_layer(m.layers[i].w, m.layers[i].b, data[i], where);
    return m;
}

} // namespace celldx
