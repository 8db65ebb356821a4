#pragma once

// Parameter containers and their initializers. Uniform fan-in scaling for
// rectified layers, symmetric fan-average scaling for saturating outputs.

#include <cmath>
#include <string>

#include "celldx/ad/tensor.hpp"
#include "celldx/rng.hpp"

namespace celldx {

enum class Activation { None, Relu, Sigmoid };

inline const char* activation_name(Activation a) {
    switch (a) {
        case Activation::Relu: return "relu";
        case Activation::Sigmoid: return "sigmoid";
        default: return "none";
    }
}

inline Activation activation_from(const std::string& s) {
    if (s == "relu") return Activation::Relu;
    if (s == "sigmoid") return Activation::Sigmoid;
    if (s == "none") return Activation::None;
    throw std::invalid_argument("unknown activation: " + s);
}

inline void fill_uniform(Tensor& t, double limit, Rng& rng) {
    for (double& v : t.d) v = rng.uniform(-limit, limit);
}

inline void init_weights(Tensor& w, int fan_in, int fan_out, Activation act, Rng& rng) {
    double limit = (act == Activation::Relu) ? std::sqrt(6.0 / fan_in)
                                             : std::sqrt(6.0 / (fan_in + fan_out));
    fill_uniform(w, limit, rng);
}

struct DenseLayer {
    Tensor w, b;  // w: in x out
    Activation act = Activation::None;

    static DenseLayer make(int in, int out, Activation act, Rng& rng) {
        DenseLayer l;
        l.w = Tensor(in, out);
        l.b = Tensor(1, out);
        l.act = act;
        init_weights(l.w, in, out, act, rng);
        return l;
    }
};

struct Conv1dLayer {
    Tensor w, b;  // w: (in_ch*k) x out_ch
    int in_ch = 0, out_ch = 0, k = 0;

    static Conv1dLayer make(int in_ch, int out_ch, int k, Rng& rng) {
        Conv1dLayer l;
        l.in_ch = in_ch;
        l.out_ch = out_ch;
        l.k = k;
        l.w = Tensor(in_ch * k, out_ch);
        l.b = Tensor(1, out_ch);
        init_weights(l.w, in_ch * k, out_ch, Activation::Relu, rng);
        return l;
    }
};

} // namespace celldx
