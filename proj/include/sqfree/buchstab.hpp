#pragma once

// Exact Buchstab decomposition of the tuple count over a window,
//
//     Q_l(x, h) = R_0 - sum_{nu=1}^{r} sum_{lambda0 <= q < Z} R_{nu,q},
//
// where R_0 sieves every coordinate by primes below lambda0 and R_{nu,q} counts
// the n whose nu-th coordinate has q as its least squared prime factor, with the
// earlier coordinates sieved to lambda0 and the later ones fully squarefree.
// Z = 2 sqrt(x + l_r + h) is the full cutoff.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "arith.hpp"
#include "interval_sieve.hpp"
#include "parallel.hpp"

namespace sqfree {

// Candidates n = -l_nu (mod q^2) examined by one ledger, summed over rows.
inline constexpr u64 kLedgerCandidateCap = 50'000'000;

struct LedgerRow {
    std::size_t nu = 0;  // 1-based coordinate
    u64 q = 0;
    u64 count = 0;
};

struct BuchstabReport {
    Window window;
    double lambda0 = 0;
    double cutoff = 0;  // Z
    u64 r0_exact = 0;
    double w_product = 0;  // prod_{p < lambda0} (1 - u(p)/p^2)
    double r0_main = 0;    // h W
    double r0_error = 0;   // |R_0 - h W|
    double h_cap = 0;      // prod_{p < lambda0} (1 + u(p))
    std::vector<LedgerRow> rnu_q_ledger;  // nonzero rows only
    std::vector<u64> s_nu;  // S_nu = sum_q #{n : q^2 | n + l_nu}
    u64 sigma_total = 0;
    u64 exact_count = 0;
    std::int64_t reconciliation = 0;  // R_0 - Sigma - Q_l, always 0

    u64 max_s_nu() const { return s_nu.empty() ? 0 : *std::max_element(s_nu.begin(), s_nu.end()); }
    bool sigma_within_bound() const { return sigma_total <= s_nu.size() * max_s_nu(); }
    bool ledger_within_s() const {
        u64 total = 0;
        for (u64 s : s_nu) total += s;
        return sigma_total <= total;
    }
    bool r0_within_cap() const { return r0_error <= h_cap; }
};

// #{ n in (lo, hi] : modulus | n }
inline u64 multiples_in(u64 modulus, u64 lo, u64 hi) { return hi / modulus - lo / modulus; }

struct R0MainTerm {
    double w = 1;             // prod_{p < lambda0} (1 - u(p)/p^2)
    double h_cap = 1;         // prod_{p < lambda0} (1 + u(p)) = sum_{d | P(lambda0)} u(d)
    double log_crude_cap = 0; // lambda0 log(1 + r), the cruder (1+r)^{lambda0}
    bool degenerate = false;
};

inline R0MainTerm r0_main_term(const OffsetTuple& l, double lambda0) {
    if (!(lambda0 >= 2.0)) throw std::invalid_argument("r0_main_term: lambda0 must be >= 2");
    R0MainTerm out;
    out.log_crude_cap = lambda0 * std::log(1.0 + static_cast<double>(l.r()));
    for (std::uint32_t p : detail::small_primes()) {
        if (static_cast<double>(p) >= lambda0) break;
        const u64 u = detail::residue_count_prime(p, l);
        const double p2 = static_cast<double>(p) * p;
        if (u == static_cast<u64>(p) * p) out.degenerate = true;
        out.w *= 1.0 - static_cast<double>(u) / p2;
        out.h_cap *= 1.0 + static_cast<double>(u);
        if (!std::isfinite(out.h_cap))
            throw capacity_error("r0_main_term: prod (1 + u(p)) over p < lambda0 overflows double");
    }
    if (out.degenerate) out.w = 0;
    return out;
}

inline BuchstabReport buchstab_ledger(const Window& w, const OffsetTuple& l, double lambda0, unsigned threads = 1) {
    w.validate(l);
    const double cutoff = full_cutoff(w, l);
    if (!(lambda0 >= 2.0) || lambda0 > cutoff)
        throw std::invalid_argument("buchstab_ledger: lambda0 must lie in [2, 2 sqrt(x + l_r + h)]");

    const std::size_t r = l.r();
    const u64 top = w.end() + l.max_offset();
    const PrimeTable primes = primes_up_to(std::max<u64>(isqrt(top), 1));
    std::vector<std::uint32_t> ledger_primes;
    for (std::uint32_t q : primes)
        if (static_cast<double>(q) >= lambda0 && static_cast<double>(q) < cutoff) ledger_primes.push_back(q);

    BuchstabReport rep;
    rep.window = w;
    rep.lambda0 = lambda0;
    rep.cutoff = cutoff;
    rep.s_nu.assign(r, 0);
    u64 candidates = 0;
    for (std::size_t i = 0; i < r; ++i) {
        for (u64 q : ledger_primes) rep.s_nu[i] += multiples_in(q * q, w.x + l[i], w.end() + l[i]);
        candidates += rep.s_nu[i];
    }
    if (candidates > kLedgerCandidateCap)
        throw capacity_error("buchstab_ledger: " + std::to_string(candidates) +
                             " candidates exceed the exact-ledger cap");

    const std::vector<double> lambda_cut(r, lambda0);
    rep.r0_exact = count_tuples(w, l, lambda_cut, threads);

    const std::size_t rows = r * ledger_primes.size();
    std::vector<u64> row_counts(rows, 0);
    parallel_for(rows, threads, [&](std::size_t idx) {
        const std::size_t nu = idx / ledger_primes.size();
        const u64 q = ledger_primes[idx % ledger_primes.size()];
        const u64 q2 = q * q;
        const u64 lo = w.x + l[nu];
        u64 count = 0;
        for (u64 m = (lo / q2 + 1) * q2; m <= w.end() + l[nu]; m += q2) {
            const u64 n = m - l[nu];
            if (least_square_prime_below(m, static_cast<double>(q)) != 0) continue;
            bool ok = true;
            for (std::size_t i = 0; i < r && ok; ++i) {
                if (i == nu) continue;
                const double limit = i < nu ? lambda0 : cutoff;
                ok = least_square_prime_below(n + l[i], limit) == 0;
            }
            count += ok;
        }
        row_counts[idx] = count;
    });
    for (std::size_t idx = 0; idx < rows; ++idx) {
        if (!row_counts[idx]) continue;
        rep.rnu_q_ledger.push_back({idx / ledger_primes.size() + 1, ledger_primes[idx % ledger_primes.size()],
                                    row_counts[idx]});
        rep.sigma_total += row_counts[idx];
    }

    const R0MainTerm main = r0_main_term(l, lambda0);
    rep.w_product = main.w;
    rep.h_cap = main.h_cap;
    rep.r0_main = static_cast<double>(w.h) * main.w;
    rep.r0_error = std::fabs(static_cast<double>(rep.r0_exact) - rep.r0_main);

    rep.exact_count = count_tuples(w, l, {}, threads);
    rep.reconciliation = static_cast<std::int64_t>(rep.r0_exact) - static_cast<std::int64_t>(rep.sigma_total) -
                         static_cast<std::int64_t>(rep.exact_count);
    return rep;
}

struct SplitSums {
    u64 s_prime = 0;         // primes q in [lambda0, lambda)
    u64 s_double_prime = 0;  // primes q in [lambda, Z)
    double s_prime_bound = 0;  // sum_{lambda0 <= q < lambda} (h/q^2 + 1)
};

// S_nu split at lambda_mid; nu is 1-based.
inline SplitSums s_split(const Window& w, const OffsetTuple& l, std::size_t nu, double lambda0, double lambda_mid) {
    w.validate(l);
    const double cutoff = full_cutoff(w, l);
    if (nu < 1 || nu > l.r()) throw std::invalid_argument("s_split: nu must lie in [1, r]");
    if (!(lambda0 >= 2.0) || !(lambda0 <= lambda_mid) || !(lambda_mid <= cutoff))
        throw std::invalid_argument("s_split: requires 2 <= lambda0 <= lambda <= 2 sqrt(x + l_r + h)");
    const u64 shift = l[nu - 1];
    const u64 top = w.end() + shift;
    SplitSums out;
    const PrimeTable primes = primes_up_to(std::max<u64>(isqrt(top), 1));
    for (std::uint32_t q : primes) {
        const double qd = q;
        if (qd < lambda0) continue;
        const u64 c = multiples_in(static_cast<u64>(q) * q, w.x + shift, top);
        if (qd < lambda_mid) {
            out.s_prime += c;
        } else if (qd < cutoff) {
            out.s_double_prime += c;
        }
    }
    // the (h/q^2 + 1) bound also runs over primes q with q^2 > top
    const PrimeTable bound_primes = primes_up_to(std::max<u64>(static_cast<u64>(std::ceil(lambda_mid)), 1));
    for (std::uint32_t q : bound_primes) {
        const double qd = q;
        if (qd >= lambda_mid) break;
        if (qd >= lambda0) out.s_prime_bound += static_cast<double>(w.h) / (qd * qd) + 1.0;
    }
    return out;
}

struct SquareMultipleQuery {
    u64 x = 0;  // X
    u64 h = 1;
    double d_lo = 1;
    double d_hi = 1;
};

// #{ d in [d_lo, d_hi] : m d^2 in (X, X+h] for some integer m }.
inline u64 count_square_multiples(const SquareMultipleQuery& q) {
    if (!(q.d_lo >= 1.0)) throw std::invalid_argument("count_square_multiples: d_lo must be >= 1");
    if (!(q.d_lo <= q.d_hi)) throw std::invalid_argument("count_square_multiples: d_lo must not exceed d_hi");
    Window{q.x, q.h}.validate();
    const u64 lo = static_cast<u64>(std::ceil(q.d_lo));
    const u64 hi = static_cast<u64>(std::floor(std::min(q.d_hi, 4.0e18)));
    const u64 end = q.x + q.h;
    u64 count = 0;
    for (u64 d = lo; d <= hi; ++d) {
        const u64 d2 = d * d;
        if (d2 > end) break;  // no multiple of d^2 reaches the window
        count += end / d2 > q.x / d2;
    }
    return count;
}

enum class PsiKind { loglog, two_thirds_power, constant };

struct PsiChoice {
    PsiKind kind = PsiKind::constant;
    double c = 2.0;
};

struct Theorem1Parameters {
    double psi = 0;
    double lambda0 = 0;  // e^{10 sqrt r} psi
    double h_min = 0;    // e^{10 sqrt r} psi x^{1/5} log x
    bool psi_in_range = false;  // 2 <= psi <= e^{-10} (log x)^{2/3}
    bool r_condition = false;   // e^{10 sqrt r} <= (log x)^{2/3} / psi
    bool hypotheses_ok = false;
};

inline Theorem1Parameters theorem1_parameters(double x, u64 r, PsiChoice psi) {
    if (!(x >= std::exp(std::numbers::e))) throw std::invalid_argument("theorem1_parameters: requires x >= e^e");
    if (r < 1) throw std::invalid_argument("theorem1_parameters: requires r >= 1");
    const double lx = std::log(x);
    Theorem1Parameters out;
    switch (psi.kind) {
        case PsiKind::loglog: out.psi = std::log(lx); break;
        case PsiKind::two_thirds_power: out.psi = std::exp(-10.0) * std::pow(lx, 2.0 / 3.0); break;
        case PsiKind::constant: out.psi = psi.c; break;
    }
    const double boost = std::exp(10.0 * std::sqrt(static_cast<double>(r)));
    out.lambda0 = boost * out.psi;
    out.h_min = boost * out.psi * std::pow(x, 0.2) * lx;
    out.psi_in_range = out.psi >= 2.0 && out.psi <= std::exp(-10.0) * std::pow(lx, 2.0 / 3.0);
    out.r_condition = boost <= std::pow(lx, 2.0 / 3.0) / out.psi;
    out.hypotheses_ok = out.psi_in_range && out.r_condition;
    return out;
}

struct Lemma1Row {
    double scale = 1;  // R
    u64 h = 0;         // ceil(R x^{1/5} log x)
    double lambda = 0; // min(h log x / R, 2 sqrt x)
    double d_hi = 0;   // 2 sqrt x
    u64 count = 0;
    double ratio = 0;  // count / (h / R)
};

// The square-multiple count over d in [lambda, 2 sqrt x] with X = x.
inline std::vector<Lemma1Row> lemma1_table(u64 x, std::span<const double> scales) {
    if (x < 16) throw std::invalid_argument("lemma1_table: x too small");
    const double xd = static_cast<double>(x);
    const double lx = std::log(xd);
    std::vector<Lemma1Row> rows;
    for (double scale : scales) {
        if (!(scale >= 1.0)) throw std::invalid_argument("lemma1_table: scales must be >= 1");
        Lemma1Row row;
        row.scale = scale;
        row.h = static_cast<u64>(std::ceil(scale * std::pow(xd, 0.2) * lx));
        row.d_hi = 2.0 * std::sqrt(xd);
        row.lambda = std::min(static_cast<double>(row.h) * lx / scale, row.d_hi);
        row.count = count_square_multiples({x, row.h, row.lambda, row.d_hi});
        row.ratio = static_cast<double>(row.count) / (static_cast<double>(row.h) / scale);
        rows.push_back(row);
    }
    return rows;
}

} // namespace sqfree
