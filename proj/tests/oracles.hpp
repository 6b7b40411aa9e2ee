#pragma once

// Brute-force reference implementations used only by the tests. None of these
// touch the library's prime tables, sieves or CRT code.

#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

namespace oracle {

using u64 = std::uint64_t;

inline bool is_prime(u64 n) {
    if (n < 2) return false;
    for (u64 d = 2; d * d <= n; ++d)
        if (n % d == 0) return false;
    return true;
}

inline bool squarefree(u64 n) {
    for (u64 d = 2; d * d <= n; ++d)
        if (n % (d * d) == 0) return false;
    return true;
}

inline u64 sigma(u64 k) {
    u64 r = 1;
    for (u64 p = 2; p * p <= k; ++p)
        if (is_prime(p) && k % (p * p) == 0) r *= p;
    return r;
}

inline int mobius(u64 n) {
    int m = 1;
    for (u64 p = 2; p <= n; ++p) {
        if (n % p) continue;
        n /= p;
        if (n % p == 0) return 0;
        m = -m;
    }
    return m;
}

// Q(x) = sum_{d <= sqrt x} mu(d) floor(x / d^2)
inline u64 squarefree_inclusion_exclusion(u64 x) {
    long long s = 0;
    for (u64 d = 1; d * d <= x; ++d) s += mobius(d) * static_cast<long long>(x / (d * d));
    return static_cast<u64>(s);
}

inline u64 u_of_prime(u64 p, const std::vector<u64>& l) {
    std::set<u64> res;
    for (u64 o : l) res.insert(o % (p * p));
    return res.size();
}

// Smallest prime p < limit with p^2 | k (0 if none), by plain trial division.
inline u64 least_square_prime(u64 k, double limit) {
    for (u64 p = 2; p * p <= k && static_cast<double>(p) < limit; ++p)
        if (is_prime(p) && k % (p * p) == 0) return p;
    return 0;
}

// #{ n in (x, x+h] : for all i no prime p < z_i with p^2 | n + l_i }
inline u64 count_tuples(u64 x, u64 h, const std::vector<u64>& l, const std::vector<double>& z = {}) {
    u64 c = 0;
    for (u64 n = x + 1; n <= x + h; ++n) {
        bool ok = true;
        for (std::size_t i = 0; i < l.size() && ok; ++i) {
            if (z.empty())
                ok = squarefree(n + l[i]);
            else
                ok = least_square_prime(n + l[i], z[i]) == 0;
        }
        c += ok;
    }
    return c;
}

// #{ n in (x, x+h] : for every p | d some p^2 | n + l_j }
inline u64 count_congruent(u64 d, u64 x, u64 h, const std::vector<u64>& l) {
    std::vector<u64> ps;
    for (u64 p = 2; p <= d; ++p)
        if (d % p == 0 && is_prime(p)) ps.push_back(p);
    u64 c = 0;
    for (u64 n = x + 1; n <= x + h; ++n) {
        bool all = true;
        for (u64 p : ps) {
            bool hit = false;
            for (u64 o : l) hit = hit || (n + o) % (p * p) == 0;
            all = all && hit;
        }
        c += all;
    }
    return c;
}

// d in [lo, hi] with ceil((X+1)/d^2) <= floor((X+h)/d^2)
inline u64 square_multiples(u64 X, u64 h, u64 lo, u64 hi) {
    u64 c = 0;
    for (u64 d = lo; d <= hi; ++d) {
        const u64 d2 = d * d;
        const u64 first = (X + 1 + d2 - 1) / d2;
        c += first * d2 <= X + h;
    }
    return c;
}

// zeta(2) by Euler-Maclaurin: partial sum to N-1 plus the tail expansion.
inline long double zeta2() {
    const long double N = 1000.0L;
    long double s = 0;
    for (int n = 999; n >= 1; --n) s += 1.0L / (static_cast<long double>(n) * n);
    s += 1 / N + 1 / (2 * N * N) + 1 / (6 * N * N * N) - 1 / (30 * N * N * N * N * N);
    return s;
}

} // namespace oracle
