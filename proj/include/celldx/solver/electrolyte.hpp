#pragma once

// Salt diffusion across negative electrode, separator, positive electrode on a
// conservative finite-volume line. Porosity weighting keeps total salt exact;
// interface fluxes use the two-point transmissibility form so flux and
// concentration stay continuous across property jumps.

#include <vector>

#include "celldx/constants.hpp"
#include "celldx/electrochem.hpp"
#include "celldx/params.hpp"
#include "celldx/solver/thomas.hpp"

namespace celldx {

class ElectrolyteGrid {
public:
    ElectrolyteGrid(const CellParams& p, int n_per_region, double c_init)
        : nx_(n_per_region) {
        if (n_per_region < 2) throw std::invalid_argument("bad electrolyte grid");
        struct Region { double len, eps, d_eff, src_per_amp; };
        double f = (1.0 - p.t_plus) / kFaraday;
        Region regions[3] = {
            {p.neg.thickness, p.neg.eps_e,
             effective_diffusivity(p.d_e, p.neg.eps_e, p.brug),
             f / (p.area * p.neg.thickness)},
            {p.sep_thickness, p.sep_eps_e,
             effective_diffusivity(p.d_e, p.sep_eps_e, p.brug), 0.0},
            {p.pos.thickness, p.pos.eps_e,
             effective_diffusivity(p.d_e, p.pos.eps_e, p.brug),
             -f / (p.area * p.pos.thickness)},
        };
        int n = 3 * nx_;
        c_.assign(n, c_init);
        dx_.resize(n);
        eps_.resize(n);
        src_.resize(n);
        std::vector<double> d(n);
        for (int r = 0; r < 3; ++r) {
            for (int i = 0; i < nx_; ++i) {
                int k = r * nx_ + i;
                dx_[k] = regions[r].len / nx_;
                eps_[k] = regions[r].eps;
                d[k] = regions[r].d_eff;
                src_[k] = regions[r].src_per_amp;
            }
        }
        trans_.assign(n + 1, 0.0);  // outer faces stay sealed
        for (int k = 1; k < n; ++k)
            trans_[k] = 1.0 / (dx_[k - 1] / (2.0 * d[k - 1]) + dx_[k] / (2.0 * d[k]));
    }

    void step(double dt, double current) {
        int n = static_cast<int>(c_.size());
        std::vector<double> lo(n), di(n), up(n), rhs(n);
        for (int i = 0; i < n; ++i) {
            double m = eps_[i] * dx_[i];
            lo[i] = -dt * trans_[i];
            up[i] = -dt * trans_[i + 1];
            di[i] = m + dt * (trans_[i] + trans_[i + 1]);
            rhs[i] = m * c_[i] + dt * src_[i] * current * dx_[i];
        }
        solve_tridiagonal(lo, di, up, rhs);
        c_ = rhs;
    }

    // boundary readouts are the outermost cell centers
    double boundary_neg() const { return c_.front(); }
    double boundary_pos() const { return c_.back(); }

    double total_salt_per_area() const {
        double s = 0.0;
        for (std::size_t i = 0; i < c_.size(); ++i) s += eps_[i] * dx_[i] * c_[i];
        return s;
    }

    const std::vector<double>& cells() const { return c_; }
    int cells_per_region() const { return nx_; }

private:
    int nx_;
    std::vector<double> c_, dx_, eps_, src_, trans_;
};

} // namespace celldx
