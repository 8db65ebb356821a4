#pragma once

// Fully connected stack and its tape bindings. forward_jvp carries an input
// tangent through the same graph so d(output)/d(chosen input) is itself a
// differentiable node: rectifier tangents are gated by the activation mask,
// sigmoid tangents by y(1-y) built from the primal output.

#include <utility>
#include <vector>

#include "celldx/ad/layers.hpp"
#include "celldx/ad/tape.hpp"

namespace celldx {

struct Mlp {
    std::vector<DenseLayer> layers;

    static Mlp make(const std::vector<int>& widths,
                    const std::vector<Activation>& acts, Rng& rng) {
        if (widths.size() < 2 || acts.size() != widths.size() - 1)
            throw std::invalid_argument("bad mlp shape");
        Mlp m;
        for (size_t i = 0; i + 1 < widths.size(); ++i)
            m.layers.push_back(DenseLayer::make(widths[i], widths[i + 1], acts[i], rng));
        return m;
    }

    std::vector<Tensor*> params() {
        std::vector<Tensor*> p;
        for (auto& l : layers) {
            p.push_back(&l.w);
            p.push_back(&l.b);
        }
        return p;
    }

    struct Bound {
        std::vector<Tape::Id> w, b;
    };

    Bound bind(Tape& t, bool trainable) const {
        Bound ids;
        for (const auto& l : layers) {
            ids.w.push_back(trainable ? t.leaf(l.w) : t.constant(l.w));
            ids.b.push_back(trainable ? t.leaf(l.b) : t.constant(l.b));
        }
        return ids;
    }

    Tape::Id forward(Tape& t, const Bound& ids, Tape::Id x) const {
        Tape::Id h = x;
        for (size_t i = 0; i < layers.size(); ++i) {
            h = t.add_rowvec(t.matmul(h, ids.w[i]), ids.b[i]);
            if (layers[i].act == Activation::Relu) h = t.relu(h);
            if (layers[i].act == Activation::Sigmoid) h = t.sigmoid(h);
        }
        return h;
    }

    // returns {y, ydot} for input x and input tangent xdot
    std::pair<Tape::Id, Tape::Id> forward_jvp(Tape& t, const Bound& ids, Tape::Id x,
                                              Tape::Id xdot) const {
        Tape::Id h = x, hd = xdot;
        for (size_t i = 0; i < layers.size(); ++i) {
            Tape::Id a = t.add_rowvec(t.matmul(h, ids.w[i]), ids.b[i]);
            Tape::Id ad = t.matmul(hd, ids.w[i]);
            switch (layers[i].act) {
                case Activation::Relu:
                    h = t.relu(a);
                    hd = t.mul(t.relu_mask(a), ad);
                    break;
                case Activation::Sigmoid: {
                    Tape::Id y = t.sigmoid(a);
                    h = y;
                    hd = t.mul(t.sub(y, t.mul(y, y)), ad);
                    break;
                }
                default:
                    h = a;
                    hd = ad;
            }
        }
        return {h, hd};
    }
};

} // namespace celldx
