#pragma once

// Capacity-ratio regression on top of the frozen identifier: the six
// normalized aging parameters it emits are the only input. Training updates
// this head alone and verifies afterwards that the identifier checkpoint on
// disk is byte-identical to what it started from.

#include <array>
#include <string>
#include <vector>

#include "celldx/ad/adam.hpp"
#include "celldx/ad/checkpoint.hpp"
#include "celldx/nets/identifier.hpp"

namespace celldx {

inline constexpr const char* kSohTag = "soh_head";

struct SohModel {
    Mlp net;
    NormalizationSpec norm;

    static std::vector<int> widths() { return {AgingParams::kDim, 64, 32, 1}; }
    static std::vector<Activation> acts() {
        return {Activation::Relu, Activation::Relu, Activation::Sigmoid};
    }

    static SohModel make(const NormalizationSpec& nm, Rng& rng) {
        SohModel m;
        m.norm = nm;
        m.net = Mlp::make(widths(), acts(), rng);
        return m;
    }

    Tensor predict(const Tensor& theta_norm) const {
        Tape t;
        auto ids = net.bind(t, false);
        return t.val(net.forward(t, ids, t.constant(theta_norm)));
    }

    double predict_one(const std::array<double, AgingParams::kDim>& theta_norm) const {
        Tensor x(1, AgingParams::kDim);
        for (int c = 0; c < AgingParams::kDim; ++c) x.at(0, c) = theta_norm[c];
        return predict(x).d[0];
    }
};

struct SohRows {
    Tensor x; // N x 6, identifier outputs
    Tensor y; // N x 1, capacity ratio labels
    std::vector<int> sample_ids;
};

inline SohRows soh_rows_from_windows(const IdentifierModel& ident, const WindowRows& w) {
    SohRows r;
    r.x = ident.predict(w.x);
    int n = r.x.rows;
    r.y = Tensor(n, 1);
    for (int i = 0; i < n; ++i) r.y.at(i, 0) = w.soh_true[static_cast<size_t>(i)];
    r.sample_ids = w.sample_ids;
    return r;
}

struct SohTrainConfig {
    double lr = 1e-3;
    size_t batch = 64;
    int max_epochs = 200;
    int patience = 200; // runs the full schedule by default, keeps the best epoch
    uint64_t seed = 1;
};

struct SohReport {
    int epochs = 0;
    double train_mse = 0.0;
    double val_mse = 0.0;
    double val_rmse = 0.0;
    std::vector<double> val_history; // one entry per epoch
};

inline double soh_mse(const SohModel& m, const Tensor& x, const Tensor& y) {
    Tensor p = m.predict(x);
    double s = 0.0;
    for (size_t i = 0; i < p.d.size(); ++i) {
        double e = p.d[i] - y.d[i];
        s += e * e;
    }
    return s / static_cast<double>(p.d.size());
}

inline SohReport train_soh(SohModel& m, const SohRows& train, const SohRows& val,
                           const SohTrainConfig& cfg) {
    Rng rng(stage_seed(cfg.seed, "soh-train"));
    Adam opt(m.net.params(), cfg.lr);
    std::vector<int> order(static_cast<size_t>(train.x.rows));
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

    SohReport rep;
    double best = 1e300;
    int since_best = 0;
    std::vector<DenseLayer> best_layers = m.net.layers;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        rng.shuffle(order);
        for (size_t b0 = 0; b0 < order.size(); b0 += cfg.batch) {
            size_t b1 = std::min(order.size(), b0 + cfg.batch);
            Tensor xb = gather_rows(train.x, order, b0, b1);
            Tensor yb = gather_rows(train.y, order, b0, b1);

            Tape t;
            auto ids = m.net.bind(t, true);
            auto y = m.net.forward(t, ids, t.constant(xb));
            auto err = t.sub(y, t.constant(yb));
            auto loss = t.mean_all(t.mul(err, err));
            t.backward(loss);

            std::vector<const Tensor*> grads;
            for (size_t l = 0; l < m.net.layers.size(); ++l) {
                grads.push_back(&t.grad(ids.w[l]));
                grads.push_back(&t.grad(ids.b[l]));
            }
            opt.step(grads);
        }

        double v = soh_mse(m, val.x, val.y);
        rep.val_history.push_back(v);
        rep.epochs = epoch;
        if (v < best) {
            best = v;
            since_best = 0;
            best_layers = m.net.layers;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }

    m.net.layers = best_layers;
    rep.val_mse = best;
    rep.val_rmse = std::sqrt(best);
    rep.train_mse = soh_mse(m, train.x, train.y);
    return rep;
}

// Stage wrapper that enforces the freeze: the identifier checkpoint must be
// byte-identical before and after this head trains.
inline SohReport train_soh_stage(SohModel& m, const std::string& identifier_path,
                                 const IdentifierModel& ident, const WindowRows& train_w,
                                 const WindowRows& val_w, const SohTrainConfig& cfg) {
    uint64_t h0 = hash_file(identifier_path);
    SohRows tr = soh_rows_from_windows(ident, train_w);
    SohRows va = soh_rows_from_windows(ident, val_w);
    SohReport rep = train_soh(m, tr, va, cfg);
    if (hash_file(identifier_path) != h0)
        throw std::runtime_error("identifier checkpoint changed while the capacity head trained: " +
                                 identifier_path);
    return rep;
}

struct EstimateResult {
    std::array<double, AgingParams::kDim> theta_norm{};
    double soh = 0.0;
};

inline EstimateResult identify_and_estimate(const IdentifierModel& ident,
                                            const SohModel& soh, const Tensor& window_row) {
    EstimateResult r;
    Tensor th = ident.predict(window_row);
    for (int c = 0; c < AgingParams::kDim; ++c) r.theta_norm[static_cast<size_t>(c)] = th.at(0, c);
    r.soh = soh.predict_one(r.theta_norm);
    return r;
}

// Sweeps one input axis across [0,1] with the others at midrange and counts
// decreases. Capacity should grow with either active-material fraction; a
// violation count is reported, not asserted.
struct MonotonicityReport {
    int eps_neg_violations = 0;
    int eps_pos_violations = 0;
    int steps = 0;
};

inline MonotonicityReport soh_monotonicity_probe(const SohModel& m, int steps = 21) {
    MonotonicityReport rep;
    rep.steps = steps;
    for (int axis = 0; axis < 2; ++axis) {
        double prev = 0.0;
        for (int i = 0; i < steps; ++i) {
            std::array<double, AgingParams::kDim> u;
            u.fill(0.5);
            u[static_cast<size_t>(axis)] = i / double(steps - 1);
            double v = m.predict_one(u);
            if (i > 0 && v < prev)
                (axis == 0 ? rep.eps_neg_violations : rep.eps_pos_violations)++;
            prev = v;
        }
    }
    return rep;
}

inline void save_soh(const std::string& path, const SohModel& m, const SohTrainConfig& cfg,
                     const SohReport& rep) {
    Checkpoint cp;
    cp.tag = kSohTag;
    cp.arch = mlp_arch(m.net);
    cp.layer_data = pack_mlp(m.net);
    m.norm.to_extras(cp.extras);
    cp.extras["train.seed"] = std::to_string(cfg.seed);
    cp.extras["train.epochs"] = std::to_string(rep.epochs);
    write_checkpoint(path, cp);
}

inline SohModel load_soh(const std::string& path) {
    Checkpoint cp = read_checkpoint(path);
    if (cp.tag != kSohTag)
        throw SchemaError(path + ": expected tag " + kSohTag + ", got " + cp.tag);
    SohModel m;
    m.net = unpack_mlp(cp.arch, cp.layer_data, path);
    m.norm = NormalizationSpec::parse(cp.extras, path);
    return m;
}

} // namespace celldx
