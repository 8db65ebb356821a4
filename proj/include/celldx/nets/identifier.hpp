#pragma once

// Aging-parameter identification from a single discharge window. A small
// convolutional encoder maps the (voltage, current, time) channels to the six
// normalized aging parameters; training is self-supervised: the estimate is
// pushed through the frozen concentration surrogate and a differentiable
// terminal-voltage graph, and the reconstruction is matched to the measured
// voltage. No parameter labels are consumed.

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "celldx/ad/adam.hpp"
#include "celldx/ad/checkpoint.hpp"
#include "celldx/nets/surrogate.hpp"

namespace celldx {

inline constexpr const char* kIdentifierTag = "identifier";

struct IdentifierModel {
    Conv1dLayer conv1, conv2;
    Mlp fc;
    int k_points = 128;
    NormalizationSpec norm;

    static IdentifierModel make(int k_points, const NormalizationSpec& norm, Rng& rng) {
        IdentifierModel m;
        m.k_points = k_points;
        m.norm = norm;
        m.conv1 = Conv1dLayer::make(3, 16, 3, rng);
        m.conv2 = Conv1dLayer::make(16, 32, 3, rng);
        int l1 = k_points - 2, p1 = (l1 - 2) / 2 + 1;
        int l2 = p1 - 2, p2 = (l2 - 2) / 2 + 1;
        m.fc = Mlp::make({32 * p2, 64, AgingParams::kDim},
                         {Activation::Relu, Activation::Sigmoid}, rng);
        return m;
    }

    std::vector<Tensor*> params() {
        std::vector<Tensor*> p = {&conv1.w, &conv1.b, &conv2.w, &conv2.b};
        for (Tensor* q : fc.params()) p.push_back(q);
        return p;
    }

    struct Bound {
        Tape::Id c1w, c1b, c2w, c2b;
        Mlp::Bound fc;
    };

    Bound bind(Tape& t, bool trainable) const {
        Bound b;
        b.c1w = trainable ? t.leaf(conv1.w) : t.constant(conv1.w);
        b.c1b = trainable ? t.leaf(conv1.b) : t.constant(conv1.b);
        b.c2w = trainable ? t.leaf(conv2.w) : t.constant(conv2.w);
        b.c2b = trainable ? t.leaf(conv2.b) : t.constant(conv2.b);
        b.fc = fc.bind(t, trainable);
        return b;
    }

    // x: windows as rows, channel-major (V, I, t), cols = 3 * k_points
    Tape::Id forward(Tape& t, const Bound& b, Tape::Id x) const {
        int l1 = k_points - 2;
        auto h = t.relu(t.conv1d(x, b.c1w, b.c1b, 3, 16, 3, k_points));
        int p1 = (l1 - 2) / 2 + 1;
        h = t.maxpool1d(h, 16, l1, 2, 2);
        int l2 = p1 - 2;
        h = t.relu(t.conv1d(h, b.c2w, b.c2b, 16, 32, 3, p1));
        h = t.maxpool1d(h, 32, l2, 2, 2);
        return fc.forward(t, b.fc, h);
    }

    // plain prediction: normalized theta rows for a block of windows
    Tensor predict(const Tensor& x) const {
        Tape t;
        auto b = bind(t, false);
        return t.val(forward(t, b, t.constant(x)));
    }
};

// --- differentiable voltage reconstruction ------------------------------------

struct ReconstructionGraph {
    Tape::Id v_norm;       // (N*K) x 1 reconstructed, normalized
    Tape::Id css_neg_norm; // surrogate channels after the saturation clamp
    Tape::Id css_pos_norm;
    Tape::Id ce0_norm, ceL_norm;
};

// theta_norm: N x 6 (node), currents/times: per-point columns of length N*K
inline ReconstructionGraph build_reconstruction(
    Tape& t, const SurrogateModel& surr,
    const std::array<Mlp::Bound, kSurrogateHeads>& sb, const CellParams& p,
    const OcpCurve& ocp_neg, const OcpCurve& ocp_pos, Tape::Id theta_norm,
    int k_points, const Tensor& current_phys_col, const Tensor& t_norm_col) {
    const NormalizationSpec& nm = surr.norm;
    int nk = current_phys_col.rows;

    Tensor i_norm(nk, 1), j_neg(nk, 1), j_pos(nk, 1), ohm(nk, 1);
    for (int r = 0; r < nk; ++r) {
        double I = current_phys_col.at(r, 0);
        i_norm.at(r, 0) = nm.current.to_unit(I);
        j_neg.at(r, 0) =
            volumetric_current_density(I, p.area, p.neg.thickness, Electrode::Negative);
        j_pos.at(r, 0) =
            volumetric_current_density(I, p.area, p.pos.thickness, Electrode::Positive);
        ohm.at(r, 0) = -electrolyte_resistance_term(p) * I / p.area;
    }

    auto rep = t.repeat_rows(theta_norm, k_points);  // (N*K) x 6
    auto xin = t.concat_cols({rep, t.constant(i_norm), t.constant(t_norm_col)});

    ReconstructionGraph g;
    std::array<Tape::Id, kSurrogateHeads> ch;
    for (int h = 0; h < kSurrogateHeads; ++h) {
        auto y = surr.heads[h].forward(t, sb[h], xin);
        ch[h] = t.clamp(y, kSatMarginFrac, 1.0 - kSatMarginFrac);
    }
    g.css_neg_norm = ch[0];
    g.css_pos_norm = ch[1];
    g.ce0_norm = ch[2];
    g.ceL_norm = ch[3];

    // physical concentrations
    auto ce0 = t.muls(ch[2], nm.ce.width());
    auto ceL = t.muls(ch[3], nm.ce.width());
    auto css_n = t.muls(ch[0], p.neg.c_s_max);
    auto css_p = t.muls(ch[1], p.pos.c_s_max);

    // interfacial areas from the estimated active fractions
    auto eps_n = t.adds(t.muls(t.slice_cols(rep, 0, 1), nm.theta[0].width()),
                        nm.theta[0].lo);
    auto eps_p = t.adds(t.muls(t.slice_cols(rep, 1, 2), nm.theta[1].width()),
                        nm.theta[1].lo);
    auto as_n = t.muls(eps_n, 3.0 / p.neg.particle_radius);
    auto as_p = t.muls(eps_p, 3.0 / p.pos.particle_radius);

    // exchange currents
    auto i0_n = t.muls(t.vsqrt(t.mul(ce0, t.mul(t.adds(t.muls(css_n, -1.0), p.neg.c_s_max),
                                                css_n))),
                       kFaraday * p.neg.k0);
    auto i0_p = t.muls(t.vsqrt(t.mul(ceL, t.mul(t.adds(t.muls(css_p, -1.0), p.pos.c_s_max),
                                                css_p))),
                       kFaraday * p.pos.k0);

    double c_eta = 2.0 * kGasConst * p.temperature / kFaraday;
    auto eta_n = t.muls(
        t.vasinh(t.mul(t.constant(j_neg), t.recip(t.muls(t.mul(as_n, i0_n), 2.0)))),
        c_eta);
    auto eta_p = t.muls(
        t.vasinh(t.mul(t.constant(j_pos), t.recip(t.muls(t.mul(as_p, i0_p), 2.0)))),
        c_eta);

    // half-cell potentials: the solid channels are already stoichiometries
    auto u_n = t.ocp(ch[0], ocp_neg);
    auto u_p = t.ocp(ch[1], ocp_pos);

    double c_conc = 2.0 * kGasConst * p.temperature * (1.0 - p.t_plus) / kFaraday;
    auto conc = t.muls(t.sub(t.vlog(ceL), t.vlog(ce0)), c_conc);

    auto v = t.add(t.add(t.sub(u_p, u_n), t.sub(eta_p, eta_n)),
                   t.add(t.constant(ohm), conc));
    g.v_norm = t.muls(t.adds(v, -nm.voltage.lo), 1.0 / nm.voltage.width());
    return g;
}

// --- window assembly -----------------------------------------------------------

struct WindowRows {
    Tensor x;                  // N x 3K, channel-major V,I,t
    Tensor v_norm_flat;        // (N*K) x 1
    Tensor current_phys_flat;  // (N*K) x 1
    Tensor t_norm_flat;        // (N*K) x 1
    std::vector<int> sample_ids;
    std::vector<AgingParams> theta_true;
    std::vector<double> soh_true;
    int k_points = 0;
};

inline WindowRows assemble_windows(const std::string& dir, const NormalizationSpec& norm,
                                   const std::vector<int>& ids) {
    WindowRows w;
    auto manifest = load_manifest(dir);
    if (ids.empty()) throw std::runtime_error(dir + ": no samples requested");
    auto first = load_series(dir, ids[0]);
    int k = static_cast<int>(first.size());
    w.k_points = k;
    int n = static_cast<int>(ids.size());
    w.x = Tensor(n, 3 * k);
    w.v_norm_flat = Tensor(n * k, 1);
    w.current_phys_flat = Tensor(n * k, 1);
    w.t_norm_flat = Tensor(n * k, 1);
    for (int i = 0; i < n; ++i) {
        auto series = (i == 0) ? first : load_series(dir, ids[i]);
        if (static_cast<int>(series.size()) != k)
            throw SchemaError(dir + ": inconsistent series length for sample " +
                              std::to_string(ids[i]));
        for (int j = 0; j < k; ++j) {
            double vn = norm.voltage.to_unit(series[j].voltage_v);
            w.x.at(i, 0 * k + j) = vn;
            w.x.at(i, 1 * k + j) = norm.current.to_unit(series[j].current_a);
            w.x.at(i, 2 * k + j) = series[j].t_norm;
            w.v_norm_flat.at(i * k + j, 0) = vn;
            w.current_phys_flat.at(i * k + j, 0) = series[j].current_a;
            w.t_norm_flat.at(i * k + j, 0) = series[j].t_norm;
        }
        w.sample_ids.push_back(ids[i]);
        w.theta_true.push_back(manifest[ids[i]].theta);
        w.soh_true.push_back(manifest[ids[i]].soh);
    }
    return w;
}

inline std::pair<std::vector<int>, std::vector<int>> split_samples(
    const std::string& dir, std::uint64_t seed, double val_frac = 0.2) {
    auto manifest = load_manifest(dir);
    std::vector<int> kept;
    for (const auto& s : manifest)
        if (!s.filtered) kept.push_back(s.id);
    Rng rng(stage_seed(seed, "surrogate-split"));  // same split as the surrogate
    rng.shuffle(kept);
    size_t n_val = static_cast<size_t>(val_frac * kept.size() + 0.5);
    if (n_val == 0) n_val = 1;
    std::vector<int> val(kept.begin(), kept.begin() + n_val);
    std::vector<int> train(kept.begin() + n_val, kept.end());
    return {train, val};
}

// --- training --------------------------------------------------------------------

struct IdentTrainConfig {
    double lr = 1e-3;
    int batch = 64;
    int max_epochs = 500;
    int patience = 25;
    std::uint64_t seed = 1;
};

struct IdentReport {
    int epochs = 0;
    double train_recon_mse = 0.0, val_recon_mse = 0.0;
    double val_recon_rmse_v = 0.0;  // volts
    std::vector<double> val_history; // one entry per epoch
};

inline double recon_mse(const IdentifierModel& m, const SurrogateModel& surr,
                        const CellParams& p, const OcpCurve& on, const OcpCurve& op,
                        const WindowRows& w) {
    Tape t;
    auto mb = m.bind(t, false);
    std::array<Mlp::Bound, kSurrogateHeads> sb;
    for (int h = 0; h < kSurrogateHeads; ++h) sb[h] = surr.heads[h].bind(t, false);
    auto theta = m.forward(t, mb, t.constant(w.x));
    auto g = build_reconstruction(t, surr, sb, p, on, op, theta, w.k_points,
                                  w.current_phys_flat, w.t_norm_flat);
    const Tensor& v = t.val(g.v_norm);
    double s = 0.0;
    for (size_t i = 0; i < v.size(); ++i) {
        double e = v.d[i] - w.v_norm_flat.d[i];
        s += e * e;
    }
    return s / v.size();
}

inline IdentReport train_identifier(IdentifierModel& m, const SurrogateModel& surr,
                                    const CellParams& p, const OcpCurve& on,
                                    const OcpCurve& op, const WindowRows& train,
                                    const WindowRows& val, const IdentTrainConfig& cfg) {
    Rng rng(stage_seed(cfg.seed, "identifier-train"));
    Adam opt(m.params(), cfg.lr);
    int n = train.x.rows, k = train.k_points;
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;

    IdentReport rep;
    double best = 1e300;
    int since_best = 0;
    IdentifierModel best_model = m;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        rng.shuffle(order);
        for (int b0 = 0; b0 < n; b0 += cfg.batch) {
            int b1 = std::min(n, b0 + cfg.batch);
            int nb = b1 - b0;
            Tensor xb(nb, train.x.cols);
            Tensor vb(nb * k, 1), ib(nb * k, 1), tb(nb * k, 1);
            for (int i = 0; i < nb; ++i) {
                int src = order[b0 + i];
                for (int c = 0; c < train.x.cols; ++c) xb.at(i, c) = train.x.at(src, c);
                for (int j = 0; j < k; ++j) {
                    vb.at(i * k + j, 0) = train.v_norm_flat.at(src * k + j, 0);
                    ib.at(i * k + j, 0) = train.current_phys_flat.at(src * k + j, 0);
                    tb.at(i * k + j, 0) = train.t_norm_flat.at(src * k + j, 0);
                }
            }
            Tape t;
            auto mb = m.bind(t, true);
            std::array<Mlp::Bound, kSurrogateHeads> sb;
            for (int h = 0; h < kSurrogateHeads; ++h) sb[h] = surr.heads[h].bind(t, false);
            auto theta = m.forward(t, mb, t.constant(xb));
            auto g = build_reconstruction(t, surr, sb, p, on, op, theta, k, ib, tb);
            auto err = t.sub(g.v_norm, t.constant(vb));
            auto loss = t.mean_all(t.mul(err, err));
            t.backward(loss);

            std::vector<const Tensor*> grads = {&t.grad(mb.c1w), &t.grad(mb.c1b),
                                                &t.grad(mb.c2w), &t.grad(mb.c2b)};
            for (size_t l = 0; l < m.fc.layers.size(); ++l) {
                grads.push_back(&t.grad(mb.fc.w[l]));
                grads.push_back(&t.grad(mb.fc.b[l]));
            }
            opt.step(grads);
        }

        double v = recon_mse(m, surr, p, on, op, val);
        rep.val_history.push_back(v);
        rep.epochs = epoch;
        if (v < best) {
            best = v;
            since_best = 0;
            best_model = m;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }
    m = best_model;
    rep.val_recon_mse = best;
    rep.val_recon_rmse_v = std::sqrt(best) * m.norm.voltage.width();
    rep.train_recon_mse = recon_mse(m, surr, p, on, op, train);
    return rep;
}

// --- persistence -------------------------------------------------------------------

inline std::string identifier_arch(const IdentifierModel& m) {
    std::ostringstream os;
    os << "conv1d 3 16 3 relu;maxpool 2 2;conv1d 16 32 3 relu;maxpool 2 2;"
       << mlp_arch(m.fc);
    return os.str();
}

// Scalar twin of the reconstruction graph: one voltage sample from candidate
// parameters, the frozen surrogate's channels and the terminal-voltage
// assembly. The graph version is checked against this in the tests.
inline double reconstruct_voltage(const SurrogateModel& surr, const CellParams& p,
                                  const OcpCurve& ocp_neg, const OcpCurve& ocp_pos,
                                  const std::array<double, AgingParams::kDim>& theta_unit,
                                  double current_a, double t_norm) {
    const NormalizationSpec& nm = surr.norm;
    Tensor xin(1, kSurrogateInputs);
    for (int c = 0; c < AgingParams::kDim; ++c) xin.at(0, c) = theta_unit[static_cast<size_t>(c)];
    xin.at(0, 6) = nm.current.to_unit(current_a);
    xin.at(0, 7) = t_norm;
    std::array<double, kSurrogateHeads> ch;
    for (int h = 0; h < kSurrogateHeads; ++h) {
        double y = surr.predict(h, xin).d[0];
        ch[static_cast<size_t>(h)] = std::clamp(y, kSatMarginFrac, 1.0 - kSatMarginFrac);
    }
    AgingParams th = nm.theta_from_unit(theta_unit);
    auto vr = terminal_voltage(ch[0] * p.neg.c_s_max, ch[1] * p.pos.c_s_max,
                               ch[2] * nm.ce.width(), ch[3] * nm.ce.width(), th, p,
                               ocp_neg, ocp_pos, current_a);
    return vr.v;
}

inline void save_identifier(const std::string& path, const IdentifierModel& m,
                            const IdentTrainConfig& cfg, const IdentReport& rep) {
    Checkpoint cp;
    cp.tag = kIdentifierTag;
    cp.arch = identifier_arch(m);
    cp.layer_data.push_back(pack_layer(m.conv1.w, m.conv1.b));
    cp.layer_data.push_back(pack_layer(m.conv2.w, m.conv2.b));
    for (const auto& l : m.fc.layers) cp.layer_data.push_back(pack_layer(l.w, l.b));
    m.norm.to_extras(cp.extras);
    cp.extras["input.k_points"] = std::to_string(m.k_points);
    cp.extras["train.seed"] = std::to_string(cfg.seed);
    cp.extras["train.epochs"] = std::to_string(rep.epochs);
    write_checkpoint(path, cp);
}

inline IdentifierModel load_identifier(const std::string& path) {
    Checkpoint cp = read_checkpoint(path);
    if (cp.tag != kIdentifierTag)
        throw SchemaError(path + ": expected tag identifier, got " + cp.tag);
    if (cp.layer_data.size() < 4)
        throw SchemaError(path + ": expected 4 layer lines");
    IdentifierModel m;
    m.k_points = static_cast<int>(parse_double(cp.extras.at("input.k_points"), path));
    {
        std::map<std::string, std::string> kv;
        for (const auto& [k, v] : cp.extras)
            if (k.rfind("norm.", 0) == 0) kv[k] = v;
        m.norm = NormalizationSpec::parse(kv, path);
    }
    m.conv1.in_ch = 3;
    m.conv1.out_ch = 16;
    m.conv1.k = 3;
    m.conv1.w = Tensor(9, 16);
    m.conv1.b = Tensor(1, 16);
    m.conv2.in_ch = 16;
    m.conv2.out_ch = 32;
    m.conv2.k = 3;
    m.conv2.w = Tensor(48, 32);
    m.conv2.b = Tensor(1, 32);
    unpack_layer(m.conv1.w, m.conv1.b, cp.layer_data[0], path);
    unpack_layer(m.conv2.w, m.conv2.b, cp.layer_data[1], path);
    auto fc_arch = cp.arch.substr(cp.arch.find("dense"));
    m.fc = unpack_mlp(fc_arch,
                      {cp.layer_data.begin() + 2, cp.layer_data.end()}, path);
    return m;
}

} // namespace celldx
