#pragma once

// Exact counting of squarefree r-tuples in windows (x, x+h] by segmented
// sieving with prime squares, and exact counts N_d of n with d | xi(n).

#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "arith.hpp"
#include "parallel.hpp"

namespace sqfree {

// The half-open window (x, x+h].
struct Window {
    u64 x = 0;
    u64 h = 1;

    u64 end() const { return x + h; }

    void validate() const {
        if (h < 1) throw std::invalid_argument("window: h must be >= 1");
        if (x > kMaxValue || h > kMaxValue - x)
            throw std::out_of_range("window: x + h exceeds supported range 2^62");
    }

    // Also checks that every n + l_j stays in range.
    void validate(const OffsetTuple& l) const {
        validate();
        if (l.max_offset() > kMaxValue - end())
            throw std::out_of_range("window: x + h + l_r exceeds supported range 2^62");
    }

    friend bool operator==(const Window&, const Window&) = default;
};

// Cutoff 2 sqrt(x + l_r + h): every prime whose square can divide some n + l_j
// lies below it.
inline double full_cutoff(const Window& w, const OffsetTuple& l) {
    return 2.0 * std::sqrt(static_cast<double>(w.end() + l.max_offset()));
}

// One flag per n in (base, base + length]; a flag is cleared once some marked
// prime square divides n + shift.
class SegmentBitmap {
public:
    SegmentBitmap(u64 base, u64 length)
        : base_(base), length_(length), words_((length + 63) / 64, ~u64{0}) {
        if (length % 64) words_.back() = (u64{1} << (length % 64)) - 1;
    }

    u64 base() const { return base_; }
    u64 length() const { return length_; }

    bool test(u64 n) const {
        const u64 i = n - base_ - 1;
        return (words_[i >> 6] >> (i & 63)) & 1;
    }

    // Clears every n with modulus | n + shift.
    void clear_multiples(u64 modulus, u64 shift) {
        const u64 lo = base_ + shift;  // n + shift ranges over (lo, lo + length]
        u64 m = (lo / modulus + 1) * modulus;
        for (u64 k = m - lo - 1; k < length_; k += modulus) words_[k >> 6] &= ~(u64{1} << (k & 63));
    }

    u64 count() const {
        u64 c = 0;
        for (u64 w : words_) c += static_cast<u64>(std::popcount(w));
        return c;
    }

private:
    u64 base_;
    u64 length_;
    std::vector<u64> words_;
};

// Marks, for offset `shift`, every prime square p^2 with p < cutoff.
inline void sieve_segment(SegmentBitmap& bits, u64 shift, std::span<const std::uint32_t> primes, double cutoff) {
    const u64 top = bits.base() + shift + bits.length();
    for (std::uint32_t p : primes) {
        if (static_cast<double>(p) >= cutoff) break;
        const u64 p2 = static_cast<u64>(p) * p;
        if (p2 > top) break;
        bits.clear_multiples(p2, shift);
    }
}

inline constexpr u64 kSegmentLength = u64{1} << 20;

// #{ n in (x, x+h] : for every i no prime p < z_i has p^2 | n + l_i }.
// With an empty `cutoffs` every coordinate uses full_cutoff(w, l), giving
// Q_l(x + h) - Q_l(x).
inline u64 count_tuples(const Window& w, const OffsetTuple& l,
                        std::span<const double> cutoffs = {}, unsigned threads = 1) {
    w.validate(l);
    std::vector<double> z(l.r(), full_cutoff(w, l));
    if (!cutoffs.empty()) {
        if (cutoffs.size() != l.r())
            throw std::invalid_argument("count_tuples: need one cutoff per offset");
        for (std::size_t i = 0; i < l.r(); ++i) {
            if (!(cutoffs[i] >= 2.0)) throw std::invalid_argument("count_tuples: cutoffs must be >= 2");
            z[i] = cutoffs[i];
        }
    }

    const u64 root = isqrt(w.end() + l.max_offset());
    const PrimeTable primes = primes_up_to(std::max<u64>(root, 1));

    const u64 segments = (w.h + kSegmentLength - 1) / kSegmentLength;
    std::vector<u64> counts(segments, 0);
    parallel_for(segments, threads, [&](std::size_t s) {
        const u64 base = w.x + s * kSegmentLength;
        const u64 len = std::min(kSegmentLength, w.h - s * kSegmentLength);
        SegmentBitmap bits(base, len);
        for (std::size_t i = 0; i < l.r(); ++i) sieve_segment(bits, l[i], primes.primes, z[i]);
        counts[s] = bits.count();
    });
    u64 total = 0;
    for (u64 c : counts) total += c;
    return total;
}

// Q(x) = #{ n <= x : n squarefree }.
inline u64 count_squarefree(u64 x, unsigned threads = 1) {
    if (x < 1) throw std::invalid_argument("count_squarefree: x must be >= 1");
    return count_tuples(Window{0, x}, OffsetTuple{0}, {}, threads);
}

namespace detail {

// #{ n in [0, y] : n = c mod m } for 0 <= c < m.
inline u128 progression_count(u128 y, u128 c, u128 m) { return y < c ? 0 : (y - c) / m + 1; }

inline u128 inverse_mod(u128 a, u128 m) {
    // extended Euclid on signed 128-bit values; m < 2^124 keeps everything in range
    __int128 t = 0, new_t = 1;
    __int128 r = static_cast<__int128>(m), new_r = static_cast<__int128>(a % m);
    while (new_r != 0) {
        __int128 q = r / new_r;
        __int128 tmp = t - q * new_t;
        t = new_t;
        new_t = tmp;
        tmp = r - q * new_r;
        r = new_r;
        new_r = tmp;
    }
    if (t < 0) t += static_cast<__int128>(m);
    return static_cast<u128>(t);
}

} // namespace detail

// Scanning is used when d^2 <= kScanFactor * h, enumeration of the u(d)
// solution classes mod d^2 otherwise.
inline constexpr u64 kScanFactor = 4;

struct CongruentCountOptions {
    enum class Method { automatic, scan, enumerate };
    Method method = Method::automatic;
};

// N_d(x, h) = #{ n in (x, x+h] : xi(n) = 0 mod d } for squarefree d, i.e. for
// every p | d some n + l_j is divisible by p^2.
inline u64 count_congruent(u64 d, const Window& w, const OffsetTuple& l, CongruentCountOptions opt = {}) {
    w.validate(l);
    if (d == 0) throw std::invalid_argument("count_congruent: d must be >= 1");
    if (d > kMaxValue) throw std::out_of_range("count_congruent: d exceeds 2^62");
    const Factorization f = factorize(d);
    if (!f.squarefree) throw std::invalid_argument("count_congruent: " + std::to_string(d) + " is not squarefree");
    if (d == 1) return w.h;

    const u64 top = w.end() + l.max_offset();
    for (u64 p : f.primes)
        if (static_cast<u128>(p) * p > top) return 0;

    const u128 d2 = static_cast<u128>(d) * d;
    u128 class_count = 1;
    for (u64 p : f.primes) {
        class_count *= detail::residue_count_prime(p, l);
        if (class_count > w.h) break;
    }
    // Enumeration costs u(d); when that exceeds the window, scanning is cheaper.
    bool scan = d2 <= static_cast<u128>(kScanFactor) * w.h || class_count > w.h;
    if (opt.method == CongruentCountOptions::Method::scan) scan = true;
    if (opt.method == CongruentCountOptions::Method::enumerate) scan = false;

    if (scan) {
        u64 count = 0;
        for (u64 n = w.x + 1; n <= w.end(); ++n) {
            bool all = true;
            for (u64 p : f.primes) {
                const u64 p2 = p * p;
                bool hit = false;
                for (u64 o : l.offsets())
                    if ((n + o) % p2 == 0) {
                        hit = true;
                        break;
                    }
                if (!hit) {
                    all = false;
                    break;
                }
            }
            count += all;
        }
        return count;
    }

    // Chinese remaindering of the classes n = -l_j (mod p^2).
    std::vector<u128> classes{0};
    u128 modulus = 1;
    for (u64 p : f.primes) {
        const u64 p2 = p * p;
        std::vector<u64> local;
        for (u64 o : l.offsets()) local.push_back((p2 - o % p2) % p2);
        std::sort(local.begin(), local.end());
        local.erase(std::unique(local.begin(), local.end()), local.end());

        const u128 inv = detail::inverse_mod(modulus % p2, p2);
        std::vector<u128> next;
        next.reserve(classes.size() * local.size());
        for (u128 a : classes)
            for (u64 b : local) {
                const u128 diff = (static_cast<u128>(b) + p2 - a % p2) % p2;
                const u128 t = diff * inv % p2;
                next.push_back(a + modulus * t);
            }
        classes.swap(next);
        modulus *= p2;
    }

    u64 count = 0;
    for (u128 c : classes)
        count += static_cast<u64>(detail::progression_count(w.end(), c, modulus) -
                                  detail::progression_count(w.x, c, modulus));
    return count;
}

struct CongruentAsymptotic {
    u64 exact = 0;
    double main_term = 0;  // h u(d) / d^2
    double abs_error = 0;
    u64 u_d = 0;

    // |N_d - h u(d)/d^2| <= u(d): each of the u(d) classes mod d^2 meets the
    // window floor(h/d^2) or ceil(h/d^2) times.
    bool within_bound() const { return abs_error <= static_cast<double>(u_d); }
};

inline CongruentAsymptotic verify_congruent_asymptotic(u64 d, const Window& w, const OffsetTuple& l) {
    CongruentAsymptotic out;
    out.exact = count_congruent(d, w, l);
    out.u_d = residue_count_u_squarefree(d, l);
    const long double d2 = static_cast<long double>(d) * static_cast<long double>(d);
    const long double main = static_cast<long double>(w.h) * static_cast<long double>(out.u_d) / d2;
    out.main_term = static_cast<double>(main);
    out.abs_error = static_cast<double>(std::fabs(static_cast<long double>(out.exact) - main));
    return out;
}

} // namespace sqfree
