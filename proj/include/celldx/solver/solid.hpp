#pragma once

// Spherical-particle diffusion on a finite-volume shell grid, stepped with
// backward Euler. The surface condition is a prescribed molar flux; positive
// flux means lithium entering the particle. Copyable by value so callers can
// checkpoint and retry partial steps.

#include <cmath>
#include <vector>

#include "celldx/solver/thomas.hpp"

namespace celldx {

class SolidParticle {
public:
    SolidParticle(double radius, double diffusivity, int n_shells, double c_init)
        : radius_(radius), d_s_(diffusivity), n_(n_shells), c_(n_shells, c_init) {
        if (radius <= 0 || diffusivity <= 0 || n_shells < 2)
            throw std::invalid_argument("bad particle discretization");
        dr_ = radius_ / n_;
        vol_.resize(n_);
        face_area_.resize(n_ + 1);
        for (int i = 0; i <= n_; ++i) {
            double r = i * dr_;
            face_area_[i] = 4.0 * M_PI * r * r;
        }
        for (int i = 0; i < n_; ++i) {
            double r0 = i * dr_, r1 = (i + 1) * dr_;
            vol_[i] = 4.0 * M_PI / 3.0 * (r1 * r1 * r1 - r0 * r0 * r0);
        }
    }

    // surface_flux: D ds/dr at r = R in mol m^-2 s^-1 (inflow positive),
    // held constant over the step
    void step(double dt, double surface_flux) {
        std::vector<double> lo(n_), di(n_), up(n_), rhs(n_);
        double g = dt * d_s_ / dr_;
        for (int i = 0; i < n_; ++i) {
            double a_in = face_area_[i];       // zero at the center
            double a_out = (i + 1 < n_) ? face_area_[i + 1] : 0.0;
            lo[i] = -g * a_in;
            up[i] = -g * a_out;
            di[i] = vol_[i] + g * (a_in + a_out);
            rhs[i] = vol_[i] * c_[i];
        }
        rhs[n_ - 1] += dt * face_area_[n_] * surface_flux;
        solve_tridiagonal(lo, di, up, rhs);
        c_ = rhs;
    }

    // half-cell extrapolation from the outermost center to the surface
    double surface_conc(double surface_flux) const {
        return c_[n_ - 1] + surface_flux / d_s_ * dr_ / 2.0;
    }

    double total_moles() const {
        double m = 0.0;
        for (int i = 0; i < n_; ++i) m += c_[i] * vol_[i];
        return m;
    }

    double volume() const { return 4.0 * M_PI / 3.0 * radius_ * radius_ * radius_; }
    double average_conc() const { return total_moles() / volume(); }
    double surface_area() const { return face_area_[n_]; }
    const std::vector<double>& cells() const { return c_; }

private:
    double radius_, d_s_, dr_;
    int n_;
    std::vector<double> c_, vol_, face_area_;
};

} // namespace celldx
