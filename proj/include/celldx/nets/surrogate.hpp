#pragma once

// Four independent dense subnets map (aging parameters, current, normalized
// time) to the four internal concentration channels. Training blends a data
// term with a lumped-dynamics residual evaluated through the tape's tangent
// path. The residual is standardized per head with statistics measured on the
// training targets themselves, so heads whose lumped model is a poor fit are
// not allowed to drag the fit away from the data.

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "celldx/ad/adam.hpp"
#include "celldx/ad/checkpoint.hpp"
#include "celldx/ad/mlp.hpp"
#include "celldx/normalization.hpp"
#include "celldx/reduced.hpp"
#include "celldx/solver/dataset.hpp"

namespace celldx {

inline constexpr int kSurrogateHeads = 4;
inline constexpr int kSurrogateInputs = 8;  // theta(6), current, time

inline const char* surrogate_tag(int head) {
    static const char* tags[kSurrogateHeads] = {"surrogate_css_neg", "surrogate_css_pos",
                                                "surrogate_ce0", "surrogate_ceL"};
    return tags[head];
}

// per-head constants of the residual
//   F = width * ydot / t_end + f_current * I + f_state * width * (y - 1/2)
// The lumped balances are written for charge-positive current, so the sign of
// the discharge current flips before it enters them; the liquid residual acts
// on the deviation from the rest concentration, which the channel midpoint
// encodes exactly.
struct HeadPhysics {
    double width = 1.0;
    double f_current = 0.0;
    double f_state = 0.0;
};

inline HeadPhysics head_physics(int head, const CellParams& p) {
    HeadPhysics h;
    switch (head) {
        case 0:
            h.width = p.neg.c_s_max;
            h.f_current = solid_rate_forcing(1.0, p, Electrode::Negative);
            break;
        case 1:
            h.width = p.pos.c_s_max;
            h.f_current = solid_rate_forcing(1.0, p, Electrode::Positive);
            break;
        case 2: {
            auto c = LiquidCoefficients::for_side(p, Electrode::Negative);
            h.width = 2.0 * p.c_e0;
            h.f_current = c.drive();
            h.f_state = c.rate();
            break;
        }
        default: {
            auto c = LiquidCoefficients::for_side(p, Electrode::Positive);
            h.width = 2.0 * p.c_e0;
            h.f_current = c.drive();
            h.f_state = c.rate();
            break;
        }
    }
    return h;
}

struct SurrogateModel {
    std::array<Mlp, kSurrogateHeads> heads;
    NormalizationSpec norm;
    std::array<double, kSurrogateHeads> resid_mu{0, 0, 0, 0};
    std::array<double, kSurrogateHeads> resid_sigma{1, 1, 1, 1};

    static std::vector<int> widths() { return {kSurrogateInputs, 64, 64, 64, 1}; }
    static std::vector<Activation> acts() {
        return {Activation::Relu, Activation::Relu, Activation::Relu,
                Activation::Sigmoid};
    }

    // normalized outputs for a block of input rows
    Tensor predict(int head, const Tensor& x) const {
        Tape t;
        auto ids = heads[head].bind(t, false);
        return t.val(heads[head].forward(t, ids, t.constant(x)));
    }
};

// --- training data -----------------------------------------------------------

struct SupervisedRows {
    Tensor x;  // N x 8
    std::array<Tensor, kSurrogateHeads> y;
    std::array<std::vector<double>, kSurrogateHeads> dydt;  // d(y)/d(t_norm), targets
    std::vector<double> t_end, current;
    std::vector<int> train_rows, val_rows;
    std::vector<int> train_samples, val_samples;
};

inline SupervisedRows assemble_supervised(const std::string& dir,
                                          const NormalizationSpec& norm,
                                          std::uint64_t seed, double val_frac = 0.2) {
    auto manifest = load_manifest(dir);
    std::vector<int> kept;
    for (const auto& s : manifest)
        if (!s.filtered) kept.push_back(s.id);
    if (kept.size() < 5) throw std::runtime_error(dir + ": too few usable samples");

    // sample-level split so no window leaks across it
    Rng rng(stage_seed(seed, "surrogate-split"));
    std::vector<int> order = kept;
    rng.shuffle(order);
    size_t n_val = static_cast<size_t>(val_frac * order.size() + 0.5);
    if (n_val == 0) n_val = 1;
    std::vector<char> is_val_sample(manifest.size(), 0);
    SupervisedRows out;
    for (size_t i = 0; i < order.size(); ++i) {
        bool v = i < n_val;
        is_val_sample[order[i]] = v;
        (v ? out.val_samples : out.train_samples).push_back(order[i]);
    }

    std::vector<std::array<double, kSurrogateInputs>> xrows;
    std::array<std::vector<double>, kSurrogateHeads> yrows, drows;
    for (int id : kept) {
        const auto& s = manifest[id];
        auto series = load_series(dir, id);
        auto th = norm.theta_to_unit(s.theta);
        int k = static_cast<int>(series.size());
        double dt_norm = 1.0 / (k - 1);
        for (int j = 0; j < k; ++j) {
            const auto& q = series[j];
            xrows.push_back(std::array<double, kSurrogateInputs>{
                th[0], th[1], th[2], th[3], th[4], th[5],
                norm.current.to_unit(q.current_a), q.t_norm});
            double yv[kSurrogateHeads] = {
                norm.css_neg.to_unit(q.css_neg), norm.css_pos.to_unit(q.css_pos),
                norm.ce.to_unit(q.ce0_neg), norm.ce.to_unit(q.ceL_pos)};
            auto channel = [&](const SeriesPoint& p, int h) {
                switch (h) {
                    case 0: return norm.css_neg.to_unit(p.css_neg);
                    case 1: return norm.css_pos.to_unit(p.css_pos);
                    case 2: return norm.ce.to_unit(p.ce0_neg);
                    default: return norm.ce.to_unit(p.ceL_pos);
                }
            };
            for (int h = 0; h < kSurrogateHeads; ++h) {
                yrows[h].push_back(yv[h]);
                double d;
                if (j == 0)
                    d = (channel(series[1], h) - yv[h]) / dt_norm;
                else if (j == k - 1)
                    d = (yv[h] - channel(series[j - 1], h)) / dt_norm;
                else
                    d = (channel(series[j + 1], h) - channel(series[j - 1], h)) /
                        (2.0 * dt_norm);
                drows[h].push_back(d);
            }
            out.t_end.push_back(s.duration_s);
            out.current.push_back(q.current_a);
            int row = static_cast<int>(xrows.size()) - 1;
            (is_val_sample[id] ? out.val_rows : out.train_rows).push_back(row);
        }
    }

    out.x = Tensor(static_cast<int>(xrows.size()), kSurrogateInputs);
    for (size_t r = 0; r < xrows.size(); ++r)
        for (int c = 0; c < kSurrogateInputs; ++c) out.x.at(static_cast<int>(r), c) = xrows[r][c];
    for (int h = 0; h < kSurrogateHeads; ++h) {
        out.y[h] = Tensor::from_column(yrows[h]);
        out.dydt[h] = std::move(drows[h]);
    }
    return out;
}

inline Tensor gather_rows(const Tensor& src, const std::vector<int>& rows, size_t b0,
                          size_t b1) {
    Tensor t(static_cast<int>(b1 - b0), src.cols);
    for (size_t i = b0; i < b1; ++i)
        for (int c = 0; c < src.cols; ++c)
            t.at(static_cast<int>(i - b0), c) = src.at(rows[i], c);
    return t;
}

// --- training ----------------------------------------------------------------

struct SurrogateTrainConfig {
    double lr = 1e-3;
    int batch = 256;
    int max_epochs = 500;
    // full schedule by default, keeping the best epoch: the negative solid
    // head keeps improving until late, and its end-of-discharge accuracy sets
    // the voltage-reconstruction floor the identifier trains against
    int patience = 500;
    double lambda_data = 1.0;
    double lambda_phys = 0.05;
    std::uint64_t seed = 1;
};

struct HeadReport {
    int epochs = 0;
    double train_mse = 0.0, val_mse = 0.0, val_rmse_phys = 0.0;
    double resid_mu = 0.0, resid_sigma = 1.0;
    std::vector<double> val_history; // one entry per epoch
};

inline double mse_of(const Mlp& net, const Tensor& x, const Tensor& y) {
    Tape t;
    auto ids = net.bind(t, false);
    auto pred = net.forward(t, ids, t.constant(x));
    double s = 0.0;
    const Tensor& p = t.val(pred);
    for (size_t i = 0; i < p.size(); ++i) {
        double e = p.d[i] - y.d[i];
        s += e * e;
    }
    return s / p.size();
}

inline HeadReport train_surrogate_head(Mlp& net, int head, const SupervisedRows& data,
                                       const HeadPhysics& phys,
                                       const SurrogateTrainConfig& cfg,
                                       double* mu_out, double* sigma_out) {
    // residual statistics over the training targets
    double mu = 0.0, var = 0.0;
    {
        std::vector<double> f;
        f.reserve(data.train_rows.size());
        for (int r : data.train_rows) {
            double y = data.y[head].d[r];
            double fd = phys.width * data.dydt[head][r] / data.t_end[r] +
                        phys.f_current * data.current[r] +
                        phys.f_state * phys.width * (y - 0.5);
            f.push_back(fd);
        }
        for (double v : f) mu += v;
        mu /= f.size();
        for (double v : f) var += (v - mu) * (v - mu);
        var /= f.size();
    }
    double sigma = std::sqrt(var);
    if (!(sigma > 1e-12)) sigma = 1.0;
    *mu_out = mu;
    *sigma_out = sigma;

    Rng rng(stage_seed(cfg.seed, std::string("surrogate-train-") + surrogate_tag(head)));
    Adam opt(net.params(), cfg.lr);
    std::vector<int> order = data.train_rows;

    Tensor x_val = gather_rows(data.x, data.val_rows, 0, data.val_rows.size());
    Tensor y_val = gather_rows(data.y[head], data.val_rows, 0, data.val_rows.size());

    HeadReport rep;
    double best = 1e300;
    int since_best = 0;
    std::vector<DenseLayer> best_layers = net.layers;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        rng.shuffle(order);
        for (size_t b0 = 0; b0 < order.size(); b0 += cfg.batch) {
            size_t b1 = std::min(order.size(), b0 + cfg.batch);
            int nb = static_cast<int>(b1 - b0);
            Tensor xb = gather_rows(data.x, order, b0, b1);
            Tensor yb = gather_rows(data.y[head], order, b0, b1);
            Tensor xdot(nb, kSurrogateInputs);
            Tensor wdt(nb, 1), cur(nb, 1);
            for (int i = 0; i < nb; ++i) {
                xdot.at(i, kSurrogateInputs - 1) = 1.0;
                int row = order[b0 + i];
                wdt.at(i, 0) = phys.width / data.t_end[row];
                cur.at(i, 0) = phys.f_current * data.current[row];
            }

            Tape t;
            auto ids = net.bind(t, true);
            auto [y, ydot] = net.forward_jvp(t, ids, t.constant(xb), t.constant(xdot));
            auto err = t.sub(y, t.constant(yb));
            auto data_term = t.mean_all(t.mul(err, err));
            auto cdot = t.mul(ydot, t.constant(wdt));
            auto resid = t.add(cdot, t.constant(cur));
            if (phys.f_state != 0.0)
                resid = t.add(resid,
                              t.muls(t.adds(y, -0.5), phys.f_state * phys.width));
            // centered on the training-set mean (the reduced operators carry a
            // systematic truncation offset the network cannot remove) and
            // rescaled to normalized concentration per second so the penalty
            // magnitude tracks the data term across heads
            auto z = t.muls(t.adds(resid, -mu), 1.0 / phys.width);
            auto phys_term = t.mean_all(t.mul(z, z));
            auto loss = t.add(t.muls(data_term, cfg.lambda_data),
                              t.muls(phys_term, cfg.lambda_phys));
            t.backward(loss);

            std::vector<const Tensor*> grads;
            for (size_t l = 0; l < net.layers.size(); ++l) {
                grads.push_back(&t.grad(ids.w[l]));
                grads.push_back(&t.grad(ids.b[l]));
            }
            opt.step(grads);
        }

        double val = mse_of(net, x_val, y_val);
        rep.val_history.push_back(val);
        rep.epochs = epoch;
        if (val < best) {
            best = val;
            since_best = 0;
            best_layers = net.layers;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }

    net.layers = best_layers;
    rep.val_mse = best;
    rep.val_rmse_phys = std::sqrt(best) * phys.width;
    Tensor x_tr = gather_rows(data.x, data.train_rows, 0, data.train_rows.size());
    Tensor y_tr = gather_rows(data.y[head], data.train_rows, 0, data.train_rows.size());
    rep.train_mse = mse_of(net, x_tr, y_tr);
    rep.resid_mu = mu;
    rep.resid_sigma = sigma;
    return rep;
}

inline SurrogateModel train_surrogate(const std::string& data_dir, const CellParams& cell,
                                      const AgingRanges& box,
                                      const SurrogateTrainConfig& cfg,
                                      std::array<HeadReport, kSurrogateHeads>& reports,
                                      std::uint64_t split_seed, double val_frac = 0.2) {
    SurrogateModel model;
    model.norm = NormalizationSpec::make(cell, box);
    auto data = assemble_supervised(data_dir, model.norm, split_seed, val_frac);
    for (int h = 0; h < kSurrogateHeads; ++h) {
        Rng init_rng(stage_seed(cfg.seed, std::string("surrogate-init-") + surrogate_tag(h)));
        model.heads[h] = Mlp::make(SurrogateModel::widths(), SurrogateModel::acts(), init_rng);
        reports[h] = train_surrogate_head(model.heads[h], h, data, head_physics(h, cell),
                                          cfg, &model.resid_mu[h], &model.resid_sigma[h]);
    }
    return model;
}

// --- persistence ---------------------------------------------------------------

inline std::string surrogate_file(const std::string& dir, int head) {
    return dir + "/" + surrogate_tag(head) + ".txt";
}

inline void save_surrogate(const std::string& dir, const SurrogateModel& m,
                           const SurrogateTrainConfig& cfg,
                           const std::array<HeadReport, kSurrogateHeads>& reports) {
    std::filesystem::create_directories(dir);
    for (int h = 0; h < kSurrogateHeads; ++h) {
        Checkpoint cp;
        cp.tag = surrogate_tag(h);
        cp.arch = mlp_arch(m.heads[h]);
        cp.layer_data = pack_mlp(m.heads[h]);
        m.norm.to_extras(cp.extras);
        cp.extras["physics.resid_mu"] = format_double(m.resid_mu[h]);
        cp.extras["physics.resid_sigma"] = format_double(m.resid_sigma[h]);
        cp.extras["train.lambda_data"] = format_double(cfg.lambda_data);
        cp.extras["train.lambda_phys"] = format_double(cfg.lambda_phys);
        cp.extras["train.seed"] = std::to_string(cfg.seed);
        cp.extras["train.epochs"] = std::to_string(reports[h].epochs);
        write_checkpoint(surrogate_file(dir, h), cp);
    }
}

inline SurrogateModel load_surrogate(const std::string& dir) {
    SurrogateModel m;
    bool norm_set = false;
    for (int h = 0; h < kSurrogateHeads; ++h) {
        std::string path = surrogate_file(dir, h);
        Checkpoint cp = read_checkpoint(path);
        if (cp.tag != surrogate_tag(h))
            throw SchemaError(path + ": expected tag " + surrogate_tag(h) + ", got " +
                              cp.tag);
        m.heads[h] = unpack_mlp(cp.arch, cp.layer_data, path);
        m.resid_mu[h] = parse_double(cp.extras.at("physics.resid_mu"), path);
        m.resid_sigma[h] = parse_double(cp.extras.at("physics.resid_sigma"), path);
        if (!norm_set) {
            std::map<std::string, std::string> kv;
            for (const auto& [k, v] : cp.extras)
                if (k.rfind("norm.", 0) == 0) kv[k] = v;
            m.norm = NormalizationSpec::parse(kv, path);
            norm_set = true;
        }
    }
    return m;
}

} // namespace celldx
