#pragma once

// Rigorous enclosures of the tuple density constant
//
//     A(l) = prod_p (1 - u(p)/p^2)
//
// via a truncated Euler product plus an explicit bound on the omitted tail.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "arith.hpp"
#include "parallel.hpp"
#include "summation.hpp"

namespace sqfree {

inline constexpr u64 kDefaultPrimeCutoff = 10'000'000;

struct EulerEstimate {
    double lower = 0;
    double upper = 0;
    u64 prime_cutoff = 0;
    double tail_log_bound = 0;  // natural-log units
    bool degenerate_zero = false;

    double midpoint() const { return 0.5 * (lower + upper); }
    bool contains(double v) const { return lower <= v && v <= upper; }
};

namespace detail {

struct LogSum {
    double sum = 0;   // sum of log factors
    double error = 0; // bound on |computed - exact|
};

// Sums log_term(p) over the table in a fixed chunk layout so that the result
// is identical for every thread count. Each term is charged 10 eps relative
// error; the compensated sum itself is charged 4 eps of its magnitude.
inline LogSum sum_log_terms(std::span<const std::uint32_t> primes,
                            const std::function<double(u64)>& log_term,
                            unsigned threads) {
    constexpr std::size_t kChunks = 64;
    const std::size_t chunk = (primes.size() + kChunks - 1) / kChunks;
    std::vector<double> sums(kChunks, 0.0), comps(kChunks, 0.0), slops(kChunks, 0.0);
    parallel_for(kChunks, threads, [&](std::size_t c) {
        const std::size_t lo = std::min(primes.size(), c * chunk);
        const std::size_t hi = std::min(primes.size(), lo + chunk);
        CompensatedSum<double> s;
        CompensatedSum<double> slop;
        for (std::size_t i = lo; i < hi; ++i) {
            double t = log_term(primes[i]);
            s.add(t);
            slop.add(std::fabs(t));
        }
        sums[c] = s.value();
        slops[c] = slop.value();
    });
    CompensatedSum<double> total;
    CompensatedSum<double> slop;
    for (std::size_t c = 0; c < kChunks; ++c) {
        total.add(sums[c]);
        slop.add(slops[c]);
    }
    constexpr double eps = std::numeric_limits<double>::epsilon();
    LogSum out;
    out.sum = total.value();
    out.error = 10 * eps * slop.value() * (1 + 4 * eps) + 4 * eps * std::fabs(out.sum);
    return out;
}

inline double exp_down(double v) { return std::nextafter(std::exp(v), 0.0); }
inline double exp_up(double v) {
    return std::nextafter(std::exp(v), std::numeric_limits<double>::infinity());
}

} // namespace detail

// Enclosure of A(l). The tail over p > cutoff uses u(p) <= r and
// -log(1 - t) <= 2t for t <= 1/2 (valid because p > cutoff >= 2r), giving
//
//     sum_{p > C} -log(1 - u(p)/p^2) <= 2r sum_{n > C} n^-2 <= 2r / (C - 1).
inline EulerEstimate density_constant(const OffsetTuple& l,
                                      u64 prime_cutoff = kDefaultPrimeCutoff,
                                      unsigned threads = 1) {
    const u64 r = l.r();
    if (prime_cutoff < 2 || prime_cutoff < 2 * r)
        throw std::invalid_argument("density_constant: prime cutoff " + std::to_string(prime_cutoff) +
                                    " must be at least max(2, 2r) = " + std::to_string(std::max<u64>(2, 2 * r)));

    EulerEstimate est;
    est.prime_cutoff = prime_cutoff;
    est.tail_log_bound = 2.0 * static_cast<double>(r) / static_cast<double>(prime_cutoff - 1);

    const PrimeTable primes = primes_up_to(prime_cutoff, std::max(prime_cutoff, kDefaultPrimeCap));

    // u(p) = p^2 is only possible for p^2 <= r.
    for (std::uint32_t p : primes) {
        if (static_cast<u64>(p) * p > r) break;
        if (detail::residue_count_prime(p, l) == static_cast<u64>(p) * p) {
            est.degenerate_zero = true;
            return est;
        }
    }

    auto term = [&l](u64 p) {
        const double u = static_cast<double>(detail::residue_count_prime(p, l));
        return std::log1p(-u / (static_cast<double>(p) * static_cast<double>(p)));
    };
    const detail::LogSum s = detail::sum_log_terms(primes.primes, term, threads);
    est.upper = std::min(1.0, detail::exp_up(s.sum + s.error));
    est.lower = detail::exp_down(s.sum - s.error - est.tail_log_bound);
    return est;
}

struct InverseBoundCheck {
    bool applicable = false;     // false when A(l) = 0
    double a_inverse_upper = 0;  // upper bound on 1/A(l)
    double bound = 0;            // e^{9 sqrt r}
    bool holds = false;
};

// Checks 1 <= A(l)^{-1} <= e^{9 sqrt r} from the enclosure.
inline InverseBoundCheck certify_inverse_bound(const OffsetTuple& l,
                                               u64 prime_cutoff = kDefaultPrimeCutoff,
                                               unsigned threads = 1) {
    InverseBoundCheck out;
    out.bound = std::exp(9.0 * std::sqrt(static_cast<double>(l.r())));
    const EulerEstimate est = density_constant(l, std::max<u64>(prime_cutoff, 2 * l.r()), threads);
    if (est.degenerate_zero) return out;
    out.applicable = true;
    out.a_inverse_upper = std::nextafter(1.0 / est.lower, std::numeric_limits<double>::infinity());
    out.holds = out.a_inverse_upper <= out.bound;
    return out;
}

// The two halves of the A(l)^{-1} estimate, split at sqrt(2r): the small-prime
// product against 4^{2 sqrt(2r)} and the tail sum against 2 sqrt(2r).
struct InverseSplitCheck {
    double split = 0;              // sqrt(2r)
    double log_small_product = 0;  // log prod_{p <= sqrt(2r)} p^2
    double log_small_bound = 0;    // 2 sqrt(2r) log 4
    double tail_sum = 0;           // upper bound on 2r sum_{n > sqrt(2r)} n^-2
    double tail_bound = 0;         // 2 sqrt(2r)
    bool holds = false;
};

inline InverseSplitCheck inverse_split_check(u64 r) {
    if (r == 0) throw std::invalid_argument("inverse_split_check: r must be >= 1");
    InverseSplitCheck c;
    c.split = std::sqrt(2.0 * static_cast<double>(r));
    const u64 split_floor = isqrt(2 * r);
    for (std::uint32_t p : detail::small_primes()) {
        if (p > split_floor) break;
        c.log_small_product += 2.0 * std::log(static_cast<double>(p));
    }
    c.log_small_bound = 2.0 * c.split * std::log(4.0);

    // sum_{n >= m} n^-2 <= sum_{n=m}^{M-1} n^-2 + 1/(M-1)
    const u64 m = split_floor + 1;
    const u64 stop = m + 1'000'000;
    CompensatedSum<double> s;
    for (u64 n = stop - 1; n >= m; --n) s.add(1.0 / (static_cast<double>(n) * static_cast<double>(n)));
    s.add(1.0 / static_cast<double>(stop - 1));
    c.tail_sum = 2.0 * static_cast<double>(r) * s.value() * (1 + 1e-12);
    c.tail_bound = 2.0 * c.split;
    c.holds = c.log_small_product <= c.log_small_bound && c.tail_sum <= c.tail_bound;
    return c;
}

// log prod_{p <= w} p, for the Chebyshev bound prod_{p <= w} p <= 4^w.
inline double log_primorial(u64 w) {
    CompensatedSum<double> s;
    for (std::uint32_t p : detail::small_primes()) {
        if (p > w) break;
        s.add(std::log(static_cast<double>(p)));
    }
    if (w > detail::kSmallPrimeBound) throw std::out_of_range("log_primorial: w too large");
    return s.value();
}

} // namespace sqfree
