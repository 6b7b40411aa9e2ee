#pragma once

// Seeded generation of random (window, offsets) instances. Only raw
// std::mt19937_64 output is used (its sequence is fixed by the standard), with
// explicit modular reduction, so instances are identical on every platform.

#include <random>
#include <vector>

#include "arith.hpp"
#include "interval_sieve.hpp"

namespace sqfree {

struct InstanceLimits {
    u64 max_x = 1'000'000;
    u64 min_h = 1;
    u64 max_h = 1'000;
    std::size_t max_r = 4;
    u64 max_offset = 10'000;
};

struct Instance {
    Window window;
    OffsetTuple offsets;
};

class InstanceGenerator {
public:
    explicit InstanceGenerator(u64 seed) : rng_(seed) {}

    // Uniform-ish integer in [lo, hi].
    u64 uniform(u64 lo, u64 hi) {
        if (hi <= lo) return lo;
        return lo + rng_() % (hi - lo + 1);
    }

    // Uniform real in [0, 1).
    double unit() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

    OffsetTuple offsets(std::size_t r, u64 max_offset) {
        if (r == 0 || max_offset + 1 < r) throw std::invalid_argument("InstanceGenerator: cannot draw offsets");
        std::vector<u64> v{0};
        while (v.size() < r) {
            const u64 o = uniform(1, max_offset);
            if (std::find(v.begin(), v.end(), o) == v.end()) v.push_back(o);
        }
        std::sort(v.begin(), v.end());
        return OffsetTuple(std::move(v));
    }

    Instance next(const InstanceLimits& lim) {
        const std::size_t r = static_cast<std::size_t>(uniform(1, lim.max_r));
        OffsetTuple l = offsets(r, lim.max_offset);
        const u64 x = uniform(0, lim.max_x);
        const u64 h = uniform(lim.min_h, lim.max_h);
        return Instance{Window{x, h}, std::move(l)};
    }

private:
    std::mt19937_64 rng_;
};

} // namespace sqfree
