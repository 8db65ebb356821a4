#pragma once

// Reverse-mode differentiation over a per-step graph of Tensor ops. Nodes are
// appended in construction order, which is already topological, so backward is
// a single reverse sweep. Time derivatives are not a tape feature: callers
// build the tangent path out of these same primitives, and the reverse sweep
// then differentiates through it (forward-over-reverse).

#include <cmath>
#include <stdexcept>
#include <vector>

#include "celldx/ad/tensor.hpp"
#include "celldx/ocp.hpp"

namespace celldx {

class Tape {
  public:
    using Id = int;

    enum class Op {
        Leaf, Const, MatMul, Add, Sub, Mul, AddRowVec, MulScalar, AddScalar,
        Relu, ReluMask, Sigmoid, Recip, Sqrt, Log, Asinh, OcpEval, Clamp,
        RepeatRows, ConcatCols, SliceCols, Conv1d, MaxPool1d, MeanAll
    };

    struct Node {
        Op op;
        int a = -1, b = -1, c = -1;
        bool needs_grad = false;
        double s0 = 0.0, s1 = 0.0;
        int i0 = 0, i1 = 0, i2 = 0;
        const OcpCurve* curve = nullptr;
        std::vector<int> cat;   // ConcatCols inputs / MaxPool argmax
        Tensor val, grad, aux;  // aux: local derivative or im2col cache
    };

    Id leaf(Tensor v) { return push(Op::Leaf, std::move(v), true); }
    Id constant(Tensor v) { return push(Op::Const, std::move(v), false); }
    Id scalar_const(double v) { return constant(Tensor::full(1, 1, v)); }

    Id matmul(Id x, Id y) {
        Node n = binary(Op::MatMul, x, y);
        n.val = matmul_values(val(x), val(y));
        return push_node(std::move(n));
    }

    Id add(Id x, Id y) { return ew(Op::Add, x, y, [](double p, double q) { return p + q; }); }
    Id sub(Id x, Id y) { return ew(Op::Sub, x, y, [](double p, double q) { return p - q; }); }
    Id mul(Id x, Id y) { return ew(Op::Mul, x, y, [](double p, double q) { return p * q; }); }

    Id add_rowvec(Id m, Id v) {
        const Tensor &tm = val(m), &tv = val(v);
        if (tv.rows != 1 || tv.cols != tm.cols)
            throw std::invalid_argument("add_rowvec shape mismatch");
        Node n = binary(Op::AddRowVec, m, v);
        n.val = tm;
        for (int r = 0; r < tm.rows; ++r)
            for (int c = 0; c < tm.cols; ++c) n.val.at(r, c) += tv.at(0, c);
        return push_node(std::move(n));
    }

    Id muls(Id x, double s) {
        Node n = unary(Op::MulScalar, x);
        n.s0 = s;
        n.val = val(x);
        for (double& v : n.val.d) v *= s;
        return push_node(std::move(n));
    }

    Id adds(Id x, double s) {
        Node n = unary(Op::AddScalar, x);
        n.s0 = s;
        n.val = val(x);
        for (double& v : n.val.d) v += s;
        return push_node(std::move(n));
    }

    Id relu(Id x) {
        Node n = unary(Op::Relu, x);
        n.val = val(x);
        for (double& v : n.val.d) v = v > 0.0 ? v : 0.0;
        return push_node(std::move(n));
    }

    // step(x) as a piecewise-constant factor: no gradient flows through it
    Id relu_mask(Id x) {
        Node n = unary(Op::ReluMask, x);
        n.needs_grad = false;
        n.val = val(x);
        for (double& v : n.val.d) v = v > 0.0 ? 1.0 : 0.0;
        return push_node(std::move(n));
    }

    Id sigmoid(Id x) {
        Node n = unary(Op::Sigmoid, x);
        n.val = val(x);
        for (double& v : n.val.d) v = 1.0 / (1.0 + std::exp(-v));
        return push_node(std::move(n));
    }

    Id recip(Id x) { return ew1(Op::Recip, x, [](double v) { return 1.0 / v; }); }
    Id vsqrt(Id x) { return ew1(Op::Sqrt, x, [](double v) { return std::sqrt(v); }); }
    Id vlog(Id x) { return ew1(Op::Log, x, [](double v) { return std::log(v); }); }
    Id vasinh(Id x) { return ew1(Op::Asinh, x, [](double v) { return std::asinh(v); }); }

    // half-cell potential lookup; the local slope is cached for backward
    Id ocp(Id x, const OcpCurve& curve) {
        Node n = unary(Op::OcpEval, x);
        n.curve = &curve;
        const Tensor& t = val(x);
        n.val = t;
        n.aux = Tensor(t.rows, t.cols);
        for (size_t i = 0; i < t.size(); ++i) {
            auto e = curve.eval(t.d[i]);
            n.val.d[i] = e.u;
            n.aux.d[i] = e.dudx;
        }
        return push_node(std::move(n));
    }

    // saturating clamp; zero gradient outside, optional flag reports clipping
    Id clamp(Id x, double lo, double hi, bool* flag = nullptr) {
        Node n = unary(Op::Clamp, x);
        n.s0 = lo;
        n.s1 = hi;
        n.val = val(x);
        for (double& v : n.val.d) {
            if (v < lo) { v = lo; if (flag) *flag = true; }
            if (v > hi) { v = hi; if (flag) *flag = true; }
        }
        return push_node(std::move(n));
    }

    Id repeat_rows(Id x, int times) {
        const Tensor& t = val(x);
        Node n = unary(Op::RepeatRows, x);
        n.i0 = times;
        n.val = Tensor(t.rows * times, t.cols);
        for (int r = 0; r < t.rows; ++r)
            for (int k = 0; k < times; ++k)
                for (int c = 0; c < t.cols; ++c)
                    n.val.at(r * times + k, c) = t.at(r, c);
        return push_node(std::move(n));
    }

    Id concat_cols(const std::vector<Id>& parts) {
        if (parts.empty()) throw std::invalid_argument("concat of nothing");
        int rows = val(parts[0]).rows, cols = 0;
        for (Id p : parts) {
            if (val(p).rows != rows) throw std::invalid_argument("concat row mismatch");
            cols += val(p).cols;
        }
        Node n;
        n.op = Op::ConcatCols;
        n.cat.assign(parts.begin(), parts.end());
        for (Id p : parts) n.needs_grad = n.needs_grad || nodes_[p].needs_grad;
        n.val = Tensor(rows, cols);
        int at = 0;
        for (Id p : parts) {
            const Tensor& t = val(p);
            for (int r = 0; r < rows; ++r)
                for (int c = 0; c < t.cols; ++c) n.val.at(r, at + c) = t.at(r, c);
            at += t.cols;
        }
        return push_node(std::move(n));
    }

    Id slice_cols(Id x, int c0, int c1) {
        const Tensor& t = val(x);
        if (c0 < 0 || c1 > t.cols || c0 >= c1)
            throw std::invalid_argument("slice_cols out of range");
        Node n = unary(Op::SliceCols, x);
        n.i0 = c0;
        n.i1 = c1;
        n.val = Tensor(t.rows, c1 - c0);
        for (int r = 0; r < t.rows; ++r)
            for (int c = c0; c < c1; ++c) n.val.at(r, c - c0) = t.at(r, c);
        return push_node(std::move(n));
    }

    // x: batch rows, channel-major layout (ch*len + pos); valid padding.
    // w: (in_ch*k) x out_ch, b: 1 x out_ch.
    Id conv1d(Id x, Id w, Id b, int in_ch, int out_ch, int k, int len) {
        const Tensor &tx = val(x), &tw = val(w), &tb = val(b);
        if (tx.cols != in_ch * len || tw.rows != in_ch * k || tw.cols != out_ch ||
            tb.rows != 1 || tb.cols != out_ch)
            throw std::invalid_argument("conv1d shape mismatch");
        int lo = len - k + 1;
        Node n;
        n.op = Op::Conv1d;
        n.a = x;
        n.b = w;
        n.c = b;
        n.i0 = in_ch;
        n.i1 = k;
        n.i2 = len;
        n.needs_grad = nodes_[x].needs_grad || nodes_[w].needs_grad || nodes_[b].needs_grad;
        // gather the sliding windows once; backward reuses the same matrix
        Tensor cols(tx.rows * lo, in_ch * k);
        for (int r = 0; r < tx.rows; ++r)
            for (int p = 0; p < lo; ++p)
                for (int ic = 0; ic < in_ch; ++ic)
                    for (int dk = 0; dk < k; ++dk)
                        cols.at(r * lo + p, ic * k + dk) = tx.at(r, ic * len + p + dk);
        Tensor prod = matmul_values(cols, tw);  // (rows*lo) x out_ch
        n.aux = std::move(cols);
        n.val = Tensor(tx.rows, out_ch * lo);
        for (int r = 0; r < tx.rows; ++r)
            for (int oc = 0; oc < out_ch; ++oc)
                for (int p = 0; p < lo; ++p)
                    n.val.at(r, oc * lo + p) = prod.at(r * lo + p, oc) + tb.at(0, oc);
        return push_node(std::move(n));
    }

    Id maxpool1d(Id x, int channels, int len, int size = 2, int stride = 2) {
        const Tensor& t = val(x);
        if (t.cols != channels * len) throw std::invalid_argument("maxpool shape mismatch");
        int lo = (len - size) / stride + 1;
        Node n = unary(Op::MaxPool1d, x);
        n.i0 = channels;
        n.i1 = len;
        n.i2 = lo;
        n.s0 = size;
        n.s1 = stride;
        n.val = Tensor(t.rows, channels * lo);
        n.cat.resize(n.val.size());
        for (int r = 0; r < t.rows; ++r)
            for (int ch = 0; ch < channels; ++ch)
                for (int p = 0; p < lo; ++p) {
                    int base = ch * len + p * stride;
                    int best = base;
                    for (int s = 1; s < size; ++s)
                        if (t.at(r, base + s) > t.at(r, best)) best = base + s;
                    n.val.at(r, ch * lo + p) = t.at(r, best);
                    n.cat[static_cast<size_t>(r) * channels * lo + ch * lo + p] = best;
                }
        return push_node(std::move(n));
    }

    Id mean_all(Id x) {
        Node n = unary(Op::MeanAll, x);
        double s = 0.0;
        for (double v : val(x).d) s += v;
        n.val = Tensor::full(1, 1, s / val(x).size());
        return push_node(std::move(n));
    }

    const Tensor& val(Id id) const { return nodes_[id].val; }
    const Tensor& grad(Id id) const { return nodes_[id].grad; }
    bool tracked(Id id) const { return nodes_[id].needs_grad; }
    size_t size() const { return nodes_.size(); }

    void backward(Id root) {
        Node& r = nodes_[root];
        if (r.val.rows != 1 || r.val.cols != 1)
            throw std::invalid_argument("backward root must be scalar");
        if (!r.needs_grad) return;
        for (auto& n : nodes_)
            if (n.needs_grad) n.grad = Tensor(n.val.rows, n.val.cols);
        r.grad.d[0] = 1.0;
        for (int id = static_cast<int>(nodes_.size()) - 1; id >= 0; --id) {
            Node& n = nodes_[id];
            if (!n.needs_grad) continue;
            pull(n);
        }
    }

  private:
    std::vector<Node> nodes_;

    Id push(Op op, Tensor v, bool tracked) {
        Node n;
        n.op = op;
        n.needs_grad = tracked;
        n.val = std::move(v);
        return push_node(std::move(n));
    }
    Id push_node(Node n) {
        nodes_.push_back(std::move(n));
        return static_cast<int>(nodes_.size()) - 1;
    }
    Node unary(Op op, Id x) {
        Node n;
        n.op = op;
        n.a = x;
        n.needs_grad = nodes_[x].needs_grad;
        return n;
    }
    Node binary(Op op, Id x, Id y) {
        Node n;
        n.op = op;
        n.a = x;
        n.b = y;
        n.needs_grad = nodes_[x].needs_grad || nodes_[y].needs_grad;
        return n;
    }

    template <class F>
    Id ew(Op op, Id x, Id y, F f) {
        const Tensor &tx = val(x), &ty = val(y);
        if (!tx.same_shape(ty)) throw std::invalid_argument("elementwise shape mismatch");
        Node n = binary(op, x, y);
        n.val = Tensor(tx.rows, tx.cols);
        for (size_t i = 0; i < tx.size(); ++i) n.val.d[i] = f(tx.d[i], ty.d[i]);
        return push_node(std::move(n));
    }

    template <class F>
    Id ew1(Op op, Id x, F f) {
        Node n = unary(op, x);
        n.val = val(x);
        for (double& v : n.val.d) v = f(v);
        return push_node(std::move(n));
    }

    Tensor* gptr(int id) {
        if (id < 0 || !nodes_[id].needs_grad) return nullptr;
        return &nodes_[id].grad;
    }

    void pull(Node& n) {
        Tensor* ga = gptr(n.a);
        Tensor* gb = gptr(n.b);
        const Tensor& g = n.grad;
        switch (n.op) {
            case Op::Leaf:
            case Op::Const:
            case Op::ReluMask:
                break;
            case Op::MatMul: {
                if (ga) ga->map().noalias() += g.map() * nodes_[n.b].val.map().transpose();
                if (gb) gb->map().noalias() += nodes_[n.a].val.map().transpose() * g.map();
                break;
            }
            case Op::Add:
                if (ga) for (size_t i = 0; i < g.size(); ++i) ga->d[i] += g.d[i];
                if (gb) for (size_t i = 0; i < g.size(); ++i) gb->d[i] += g.d[i];
                break;
            case Op::Sub:
                if (ga) for (size_t i = 0; i < g.size(); ++i) ga->d[i] += g.d[i];
                if (gb) for (size_t i = 0; i < g.size(); ++i) gb->d[i] -= g.d[i];
                break;
            case Op::Mul: {
                const Tensor &va = nodes_[n.a].val, &vb = nodes_[n.b].val;
                if (ga) for (size_t i = 0; i < g.size(); ++i) ga->d[i] += g.d[i] * vb.d[i];
                if (gb) for (size_t i = 0; i < g.size(); ++i) gb->d[i] += g.d[i] * va.d[i];
                break;
            }
            case Op::AddRowVec:
                if (ga) for (size_t i = 0; i < g.size(); ++i) ga->d[i] += g.d[i];
                if (gb)
                    for (int r = 0; r < g.rows; ++r)
                        for (int c = 0; c < g.cols; ++c) gb->at(0, c) += g.at(r, c);
                break;
            case Op::MulScalar:
                if (ga) for (size_t i = 0; i < g.size(); ++i) ga->d[i] += g.d[i] * n.s0;
                break;
            case Op::AddScalar:
                if (ga) for (size_t i = 0; i < g.size(); ++i) ga->d[i] += g.d[i];
                break;
            case Op::Relu: {
                const Tensor& va = nodes_[n.a].val;
                if (ga)
                    for (size_t i = 0; i < g.size(); ++i)
                        if (va.d[i] > 0.0) ga->d[i] += g.d[i];
                break;
            }
            case Op::Sigmoid:
                if (ga)
                    for (size_t i = 0; i < g.size(); ++i) {
                        double y = n.val.d[i];
                        ga->d[i] += g.d[i] * y * (1.0 - y);
                    }
                break;
            case Op::Recip:
                if (ga)
                    for (size_t i = 0; i < g.size(); ++i) {
                        double y = n.val.d[i];
                        ga->d[i] -= g.d[i] * y * y;
                    }
                break;
            case Op::Sqrt:
                if (ga)
                    for (size_t i = 0; i < g.size(); ++i)
                        ga->d[i] += g.d[i] * 0.5 / n.val.d[i];
                break;
            case Op::Log: {
                const Tensor& va = nodes_[n.a].val;
                if (ga)
                    for (size_t i = 0; i < g.size(); ++i) ga->d[i] += g.d[i] / va.d[i];
                break;
            }
            case Op::Asinh: {
                const Tensor& va = nodes_[n.a].val;
                if (ga)
                    for (size_t i = 0; i < g.size(); ++i)
                        ga->d[i] += g.d[i] / std::sqrt(1.0 + va.d[i] * va.d[i]);
                break;
            }
            case Op::OcpEval:
                if (ga)
                    for (size_t i = 0; i < g.size(); ++i) ga->d[i] += g.d[i] * n.aux.d[i];
                break;
            case Op::Clamp: {
                const Tensor& va = nodes_[n.a].val;
                if (ga)
                    for (size_t i = 0; i < g.size(); ++i)
                        if (va.d[i] >= n.s0 && va.d[i] <= n.s1) ga->d[i] += g.d[i];
                break;
            }
            case Op::RepeatRows:
                if (ga)
                    for (int r = 0; r < ga->rows; ++r)
                        for (int k = 0; k < n.i0; ++k)
                            for (int c = 0; c < g.cols; ++c)
                                ga->at(r, c) += g.at(r * n.i0 + k, c);
                break;
            case Op::ConcatCols: {
                int at = 0;
                for (Id p : n.cat) {
                    Tensor* gp = gptr(p);
                    int w = nodes_[p].val.cols;
                    if (gp)
                        for (int r = 0; r < g.rows; ++r)
                            for (int c = 0; c < w; ++c) gp->at(r, c) += g.at(r, at + c);
                    at += w;
                }
                break;
            }
            case Op::SliceCols:
                if (ga)
                    for (int r = 0; r < g.rows; ++r)
                        for (int c = 0; c < g.cols; ++c) ga->at(r, n.i0 + c) += g.at(r, c);
                break;
            case Op::Conv1d: {
                int in_ch = n.i0, k = n.i1, len = n.i2;
                int out_ch = nodes_[n.b].val.cols;
                int lo = len - k + 1;
                int rows = nodes_[n.a].val.rows;
                // regroup upstream gradient to (rows*lo) x out_ch
                Tensor gr(rows * lo, out_ch);
                for (int r = 0; r < rows; ++r)
                    for (int oc = 0; oc < out_ch; ++oc)
                        for (int p = 0; p < lo; ++p)
                            gr.at(r * lo + p, oc) = g.at(r, oc * lo + p);
                if (gb) gb->map().noalias() += n.aux.map().transpose() * gr.map();
                if (Tensor* gc = gptr(n.c))
                    for (int r = 0; r < gr.rows; ++r)
                        for (int oc = 0; oc < out_ch; ++oc) gc->at(0, oc) += gr.at(r, oc);
                if (ga) {
                    Tensor gcols = matmul_values(gr, [&] {
                        Tensor wt(nodes_[n.b].val.cols, nodes_[n.b].val.rows);
                        wt.map() = nodes_[n.b].val.map().transpose();
                        return wt;
                    }());
                    for (int r = 0; r < rows; ++r)
                        for (int p = 0; p < lo; ++p)
                            for (int ic = 0; ic < in_ch; ++ic)
                                for (int dk = 0; dk < k; ++dk)
                                    ga->at(r, ic * len + p + dk) +=
                                        gcols.at(r * lo + p, ic * k + dk);
                }
                break;
            }
            case Op::MaxPool1d:
                if (ga) {
                    int per_row = n.i0 * n.i2;
                    for (int r = 0; r < g.rows; ++r)
                        for (int c = 0; c < per_row; ++c)
                            ga->at(r, n.cat[static_cast<size_t>(r) * per_row + c]) +=
                                g.at(r, c);
                }
                break;
            case Op::MeanAll: {
                if (ga) {
                    double w = n.grad.d[0] / ga->size();
                    for (double& v : ga->d) v += w;
                }
                break;
            }
        }
    }
};

} // namespace celldx
