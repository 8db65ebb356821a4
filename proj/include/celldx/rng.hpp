#pragma once

// Seeded randomness helpers. All stochastic stages derive their own stream
// from the run seed plus a stage label, so reordering stages cannot silently
// change results.

#include <cstdint>
#include <random>
#include <string_view>

namespace celldx {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// stable stage seed: run seed mixed with a label hash
inline std::uint64_t stage_seed(std::uint64_t run_seed, std::string_view stage) {
    std::uint64_t h = 1469598103934665603ull;
    for (char ch : stage) {
        h ^= static_cast<unsigned char>(ch);
        h *= 1099511628211ull;
    }
    return splitmix64(run_seed ^ h);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // uniform in [0, 1) with 53 random bits
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    std::uint64_t bits() { return eng_(); }
    std::uint32_t index(std::uint32_t n) {
        return static_cast<std::uint32_t>(eng_() % n);
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i)
            std::swap(v[i - 1], v[index(static_cast<std::uint32_t>(i))]);
    }

private:
    std::mt19937_64 eng_;
};

} // namespace celldx
