#pragma once

// Dense row-major matrix of doubles. Heavy products go through Eigen maps;
// everything else is plain loops.

#include <Eigen/Core>
#include <stdexcept>
#include <vector>

namespace celldx {

struct Tensor {
    int rows = 0, cols = 0;
    std::vector<double> d;

    Tensor() = default;
    Tensor(int r, int c) : rows(r), cols(c), d(static_cast<size_t>(r) * c, 0.0) {}

    static Tensor zeros(int r, int c) { return Tensor(r, c); }
    static Tensor full(int r, int c, double v) {
        Tensor t(r, c);
        std::fill(t.d.begin(), t.d.end(), v);
        return t;
    }
    static Tensor from_column(const std::vector<double>& v) {
        Tensor t(static_cast<int>(v.size()), 1);
        t.d = v;
        return t;
    }

    double& at(int r, int c) { return d[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return d[static_cast<size_t>(r) * cols + c]; }
    size_t size() const { return d.size(); }
    bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }

    using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<EMat> map() { return {d.data(), rows, cols}; }
    Eigen::Map<const EMat> map() const { return {d.data(), rows, cols}; }
};

inline Tensor matmul_values(const Tensor& a, const Tensor& b) {
    if (a.cols != b.rows) throw std::invalid_argument("matmul shape mismatch");
    Tensor c(a.rows, b.cols);
    c.map().noalias() = a.map() * b.map();
    return c;
}

} // namespace celldx
