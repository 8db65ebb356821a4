#pragma once

// Latin hypercube draw: one point per stratum per dimension, jittered.

#include <vector>

#include "celldx/rng.hpp"

namespace celldx {

inline std::vector<std::vector<double>> latin_hypercube(int n, int dims, Rng& rng) {
    std::vector<std::vector<double>> pts(n, std::vector<double>(dims));
    std::vector<int> perm(n);
    for (int d = 0; d < dims; ++d) {
        for (int i = 0; i < n; ++i) perm[i] = i;
        rng.shuffle(perm);
        for (int i = 0; i < n; ++i)
            pts[i][d] = (perm[i] + rng.uniform()) / n;
    }
    return pts;
}

} // namespace celldx
