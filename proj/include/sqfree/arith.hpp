#pragma once

// Exact elementary arithmetic for squarefree tuple counting: squarefull
// radicals, residue-class counts u(p) and u(d), prime tables and small
// factorization helpers. Everything here is a pure function of its inputs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace sqfree {

using u64 = std::uint64_t;
using u128 = unsigned __int128;

// Largest value any n + l_j may take.
inline constexpr u64 kMaxValue = u64{1} << 62;

// Default cap for primes_up_to; sqrt(kMaxValue) = 2^31.
inline constexpr u64 kDefaultPrimeCap = u64{1} << 31;

// ---------------------------------------------------------------------------
// Integer roots
// ---------------------------------------------------------------------------

inline u64 isqrt(u64 n) {
    u64 r = static_cast<u64>(std::sqrt(static_cast<long double>(n)));
    while (r > 0 && static_cast<u128>(r) * r > n) --r;
    while (static_cast<u128>(r + 1) * (r + 1) <= n) ++r;
    return r;
}

inline u64 icbrt(u64 n) {
    u64 r = static_cast<u64>(std::cbrt(static_cast<long double>(n)));
    while (r > 0 && static_cast<u128>(r) * r * r > n) --r;
    while (static_cast<u128>(r + 1) * (r + 1) * (r + 1) <= n) ++r;
    return r;
}

inline bool is_perfect_square(u64 n, u64* root = nullptr) {
    u64 s = isqrt(n);
    if (root) *root = s;
    return s * s == n;
}

// ---------------------------------------------------------------------------
// OffsetTuple
// ---------------------------------------------------------------------------

// The offset vector l = <l_1, ..., l_r>: non-empty, strictly increasing,
// every entry at most kMaxValue.
class OffsetTuple {
public:
    explicit OffsetTuple(std::vector<u64> offsets) : offsets_(std::move(offsets)) {
        if (offsets_.empty())
            throw std::invalid_argument("offset tuple must contain at least one offset");
        for (std::size_t i = 0; i < offsets_.size(); ++i) {
            if (offsets_[i] > kMaxValue)
                throw std::out_of_range("offset " + std::to_string(offsets_[i]) +
                                        " exceeds supported range 2^62");
            if (i > 0 && offsets_[i] <= offsets_[i - 1])
                throw std::invalid_argument("offsets must be strictly increasing");
        }
    }

    OffsetTuple(std::initializer_list<u64> offsets)
        : OffsetTuple(std::vector<u64>(offsets)) {}

    std::span<const u64> offsets() const { return offsets_; }
    std::size_t r() const { return offsets_.size(); }
    u64 operator[](std::size_t i) const { return offsets_[i]; }
    u64 max_offset() const { return offsets_.back(); }

    // The same tuple translated by c (u(p) is invariant under this).
    OffsetTuple shifted(u64 c) const {
        std::vector<u64> v = offsets_;
        for (auto& o : v) o += c;
        return OffsetTuple(std::move(v));
    }

    std::string to_string(char sep = ';') const {
        std::string s;
        for (std::size_t i = 0; i < offsets_.size(); ++i) {
            if (i) s += sep;
            s += std::to_string(offsets_[i]);
        }
        return s;
    }

    friend bool operator==(const OffsetTuple&, const OffsetTuple&) = default;

private:
    std::vector<u64> offsets_;
};

// ---------------------------------------------------------------------------
// Primes
// ---------------------------------------------------------------------------

struct PrimeTable {
    u64 bound = 0;
    std::vector<std::uint32_t> primes;

    std::size_t size() const { return primes.size(); }
    auto begin() const { return primes.begin(); }
    auto end() const { return primes.end(); }

    // Primes p with p < limit (strict), as a subrange.
    std::span<const std::uint32_t> below(double limit) const {
        auto it = std::lower_bound(primes.begin(), primes.end(), limit,
                                   [](std::uint32_t p, double lim) { return p < lim; });
        return {primes.data(), static_cast<std::size_t>(it - primes.begin())};
    }
};

// Odd-only segmented Eratosthenes.
inline PrimeTable primes_up_to(u64 bound, u64 cap = kDefaultPrimeCap) {
    if (bound < 1) throw std::invalid_argument("primes_up_to: bound must be >= 1");
    if (bound > cap)
        throw capacity_error("primes_up_to: bound " + std::to_string(bound) +
                             " exceeds configured cap " + std::to_string(cap));
    if (bound > 0xFFFFFFFFull)
        throw capacity_error("primes_up_to: bound exceeds 32-bit prime storage");

    PrimeTable table;
    table.bound = bound;
    if (bound < 2) return table;
    table.primes.push_back(2);

    const u64 root = isqrt(bound);
    std::vector<char> small(root + 1, 1);
    std::vector<u64> base;
    for (u64 i = 3; i <= root; i += 2) {
        if (!small[i]) continue;
        base.push_back(i);
        for (u64 j = i * i; j <= root; j += 2 * i) small[j] = 0;
    }

    constexpr u64 kSegment = u64{1} << 18;  // odd numbers per segment
    std::vector<char> seg(kSegment);
    for (u64 lo = 3; lo <= bound; lo += 2 * kSegment) {
        const u64 hi = std::min(bound, lo + 2 * kSegment - 1);
        const u64 len = (hi - lo) / 2 + 1;
        std::fill(seg.begin(), seg.begin() + static_cast<std::ptrdiff_t>(len), 1);
        for (u64 p : base) {
            if (p * p > hi) break;
            u64 start = std::max(p * p, (lo + p - 1) / p * p);
            if (start % 2 == 0) start += p;
            for (u64 j = start; j <= hi; j += 2 * p) seg[(j - lo) / 2] = 0;
        }
        for (u64 i = 0; i < len; ++i)
            if (seg[i]) table.primes.push_back(static_cast<std::uint32_t>(lo + 2 * i));
    }
    return table;
}

namespace detail {

// Shared trial-division table; covers the cube root of every 64-bit value.
inline constexpr u64 kSmallPrimeBound = u64{1} << 22;

inline const PrimeTable& small_primes() {
    static const PrimeTable table = primes_up_to(kSmallPrimeBound);
    return table;
}

inline u64 mulmod(u64 a, u64 b, u64 m) {
    return static_cast<u64>(static_cast<u128>(a) * b % m);
}

inline u64 powmod(u64 a, u64 e, u64 m) {
    u64 r = 1 % m;
    a %= m;
    while (e) {
        if (e & 1) r = mulmod(r, a, m);
        a = mulmod(a, a, m);
        e >>= 1;
    }
    return r;
}

} // namespace detail

// Deterministic Miller-Rabin for all 64-bit inputs.
inline bool is_prime(u64 n) {
    if (n < 2) return false;
    for (u64 p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        if (n % p == 0) return n == p;
    }
    u64 d = n - 1;
    int s = 0;
    while ((d & 1) == 0) {
        d >>= 1;
        ++s;
    }
    for (u64 a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        u64 x = detail::powmod(a, d, n);
        if (x == 1 || x == n - 1) continue;
        bool composite = true;
        for (int i = 1; i < s; ++i) {
            x = detail::mulmod(x, x, n);
            if (x == n - 1) {
                composite = false;
                break;
            }
        }
        if (composite) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Squarefull parts
// ---------------------------------------------------------------------------

// Smallest prime p < limit with p^2 | k, or 0 if there is none.
//
// Trial division runs over primes p <= cbrt(k). What remains has only prime
// factors above cbrt(k), so it is 1, p, p*q or p^2; only the last contributes.
inline u64 least_square_prime_below(u64 k, double limit) {
    if (k == 0) throw std::invalid_argument("least_square_prime_below: k must be >= 1");
    const u64 cube_root = icbrt(k);
    u64 rest = k;
    for (std::uint32_t p : detail::small_primes()) {
        if (p > cube_root) break;
        if (static_cast<double>(p) >= limit) return 0;
        if (rest % p) continue;
        rest /= p;
        if (rest % p == 0) return p;
    }
    u64 s = 0;
    if (rest > 1 && is_perfect_square(rest, &s) && static_cast<double>(s) < limit) return s;
    return 0;
}

// sigma(k): product of the distinct primes p with p^2 | k.
inline u64 squarefull_radical(u64 k) {
    if (k == 0) throw std::invalid_argument("squarefull_radical: k must be >= 1");
    const u64 cube_root = icbrt(k);
    u64 rest = k;
    u64 radical = 1;
    for (std::uint32_t p : detail::small_primes()) {
        if (p > cube_root) break;
        if (rest % p) continue;
        int e = 0;
        while (rest % p == 0) {
            rest /= p;
            ++e;
        }
        if (e >= 2) radical *= p;
    }
    u64 s = 0;
    if (rest > 1 && is_perfect_square(rest, &s)) radical *= s;
    return radical;
}

inline bool is_squarefree(u64 k) { return squarefull_radical(k) == 1; }

// xi(n) = prod_j sigma(n + l_j). Throws std::overflow_error if the product
// does not fit in 64 bits.
inline u64 xi(u64 n, const OffsetTuple& l) {
    if (n == 0) throw std::invalid_argument("xi: n must be >= 1");
    u64 product = 1;
    for (u64 o : l.offsets()) {
        if (n > kMaxValue - o) throw std::out_of_range("xi: n + l_j exceeds 2^62");
        u64 s = squarefull_radical(n + o);
        if (__builtin_mul_overflow(product, s, &product))
            throw std::overflow_error("xi: product of squarefull radicals overflows 64 bits");
    }
    return product;
}

// True iff every n + l_j is squarefree (equivalently xi(n) = 1).
inline bool is_tuple_squarefree(u64 n, const OffsetTuple& l) {
    for (u64 o : l.offsets())
        if (!is_squarefree(n + o)) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Factorization of moduli
// ---------------------------------------------------------------------------

struct Factorization {
    std::vector<u64> primes;  // distinct, ascending
    bool squarefree = true;
};

// Factors d by trial division up to 2^22, then classifies the cofactor
// (prime, or square of a prime). Cofactors with two distinct large factors
// are rejected with std::out_of_range.
inline Factorization factorize(u64 d) {
    if (d == 0) throw std::invalid_argument("factorize: d must be >= 1");
    Factorization f;
    u64 rest = d;
    for (std::uint32_t p : detail::small_primes()) {
        if (static_cast<u64>(p) * p > rest) break;
        if (rest % p) continue;
        f.primes.push_back(p);
        rest /= p;
        if (rest % p == 0) {
            f.squarefree = false;
            while (rest % p == 0) rest /= p;
        }
    }
    if (rest > 1) {
        u64 s = 0;
        if (is_prime(rest)) {
            f.primes.push_back(rest);
        } else if (is_perfect_square(rest, &s) && is_prime(s)) {
            f.primes.push_back(s);
            f.squarefree = false;
        } else {
            throw std::out_of_range("factorize: " + std::to_string(d) +
                                    " has two prime factors above 2^22");
        }
    }
    return f;
}

inline int mobius(u64 d) {
    Factorization f = factorize(d);
    if (!f.squarefree) return 0;
    return (f.primes.size() % 2) ? -1 : 1;
}

// ---------------------------------------------------------------------------
// Residue-class counts
// ---------------------------------------------------------------------------

namespace detail {

// u(p) for p already known to be prime.
inline u64 residue_count_prime(u64 p, const OffsetTuple& l) {
    const u128 modulus = static_cast<u128>(p) * p;
    if (modulus > l.max_offset() - l[0]) return l.r();
    std::vector<u64> residues;
    residues.reserve(l.r());
    for (u64 o : l.offsets()) residues.push_back(static_cast<u64>(o % modulus));
    std::sort(residues.begin(), residues.end());
    return static_cast<u64>(std::unique(residues.begin(), residues.end()) - residues.begin());
}

} // namespace detail

// u(p): number of distinct residues of l_1..l_r modulo p^2.
inline u64 residue_count_u(u64 p, const OffsetTuple& l) {
    if (!is_prime(p)) throw std::invalid_argument("residue_count_u: " + std::to_string(p) + " is not prime");
    return detail::residue_count_prime(p, l);
}

// u(d) = prod_{p | d} u(p) for squarefree d.
inline u64 residue_count_u_squarefree(u64 d, const OffsetTuple& l) {
    Factorization f = factorize(d);
    if (!f.squarefree)
        throw std::invalid_argument("residue_count_u_squarefree: " + std::to_string(d) + " is not squarefree");
    u64 result = 1;
    for (u64 p : f.primes)
        if (__builtin_mul_overflow(result, detail::residue_count_prime(p, l), &result))
            throw std::overflow_error("residue_count_u_squarefree: u(d) overflows 64 bits");
    return result;
}

} // namespace sqfree
