#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "celldx/io/csv.hpp"

namespace celldx {

// Open-circuit-potential curve: tabulated knots with monotonicity-preserving
// cubic (Fritsch-Carlson) interpolation. Evaluation outside the tabulated
// domain is clamped to the end values, with zero slope.
class OcpCurve {
  public:
    OcpCurve() = default;

    OcpCurve(std::vector<double> x, std::vector<double> u)
        : x_(std::move(x)), u_(std::move(u)) {
        if (x_.size() < 2 || x_.size() != u_.size())
            throw std::invalid_argument("OcpCurve: need at least two knots");
        for (size_t i = 1; i < x_.size(); ++i)
            if (!(x_[i] > x_[i - 1]))
                throw std::invalid_argument("OcpCurve: x must be strictly increasing");
        build_slopes();
    }

    static OcpCurve load(const std::string& path) {
        NumericCsv t = read_numeric_csv(path, "x,u_volts");
        std::vector<double> x, u;
        x.reserve(t.rows.size());
        u.reserve(t.rows.size());
        for (auto& r : t.rows) {
            x.push_back(r[0]);
            u.push_back(r[1]);
        }
        return OcpCurve(std::move(x), std::move(u));
    }

    struct Eval {
        double u;
        double dudx;
    };

    Eval eval(double x) const {
        if (x <= x_.front()) return {u_.front(), 0.0};
        if (x >= x_.back()) return {u_.back(), 0.0};
        size_t i = segment(x);
        double h = x_[i + 1] - x_[i];
        double t = (x - x_[i]) / h;
        double t2 = t * t, t3 = t2 * t;
        double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
        double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
        double u = h00 * u_[i] + h10 * h * m_[i] + h01 * u_[i + 1] + h11 * h * m_[i + 1];
        double dh00 = (6 * t2 - 6 * t) / h, dh10 = 3 * t2 - 4 * t + 1;
        double dh01 = (-6 * t2 + 6 * t) / h, dh11 = 3 * t2 - 2 * t;
        double d = dh00 * u_[i] + dh10 * m_[i] + dh01 * u_[i + 1] + dh11 * m_[i + 1];
        return {u, d};
    }

    double operator()(double x) const { return eval(x).u; }

    double x_min() const { return x_.front(); }
    double x_max() const { return x_.back(); }
    double u_at_x_min() const { return u_.front(); }
    double u_at_x_max() const { return u_.back(); }
    size_t knot_count() const { return x_.size(); }
    bool decreasing() const { return u_.back() < u_.front(); }

    // Solves u(x) = target on the tabulated domain by bisection. The curve is
    // monotone, so the root is unique when it exists.
    struct Root {
        double x;
        bool found;
    };
    Root invert(double target, double tol = 1e-10) const {
        double lo = x_.front(), hi = x_.back();
        double flo = u_.front() - target, fhi = u_.back() - target;
        if (flo == 0.0) return {lo, true};
        if (fhi == 0.0) return {hi, true};
        if (flo * fhi > 0.0) return {0.0, false};
        for (int it = 0; it < 200 && hi - lo > tol; ++it) {
            double mid = 0.5 * (lo + hi);
            double fm = (*this)(mid) - target;
            if (fm == 0.0) return {mid, true};
            if (fm * flo > 0.0) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        return {0.5 * (lo + hi), true};
    }

  private:
    size_t segment(double x) const {
        auto it = std::upper_bound(x_.begin(), x_.end(), x);
        size_t i = static_cast<size_t>(it - x_.begin());
        return std::min(std::max<size_t>(i, 1) - 1, x_.size() - 2);
    }

    void build_slopes() {
        size_t n = x_.size();
        std::vector<double> h(n - 1), d(n - 1);
        for (size_t i = 0; i + 1 < n; ++i) {
            h[i] = x_[i + 1] - x_[i];
            d[i] = (u_[i + 1] - u_[i]) / h[i];
        }
        m_.assign(n, 0.0);
        for (size_t i = 1; i + 1 < n; ++i) {
            if (d[i - 1] * d[i] <= 0.0) {
                m_[i] = 0.0;
            } else {
                double w1 = 2 * h[i] + h[i - 1];
                double w2 = h[i] + 2 * h[i - 1];
                m_[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
            }
        }
        m_[0] = end_slope(h[0], h[1], d[0], d[1]);
        m_[n - 1] = end_slope(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
    }

    // Three-point end slope with the usual shape-preserving limiter.
    static double end_slope(double h0, double h1, double d0, double d1) {
        double m = ((2 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (m * d0 <= 0.0) return 0.0;
        if (d0 * d1 < 0.0 && std::abs(m) > 3.0 * std::abs(d0)) return 3.0 * d0;
        return m;
    }

    std::vector<double> x_, u_, m_;
};

} // namespace celldx
