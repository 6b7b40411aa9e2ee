#pragma once

// Selberg upper-bound sieve for squarefree tuples.
//
// With g(d) = u(d)/d^2 (multiplicative on squarefree d), the weights
//
//     lambda(d) = mu(d) prod_{p|d} (1 - g(p))^{-1} H(z/d, d) / H(z)
//
// minimise V = sum_{d1,d2 <= z} lambda(d1) lambda(d2) g([d1,d2]) subject to
// lambda(1) = 1, where
//
//     H(y, m) = sum_{k <= y, (k,m) = 1} mu^2(k) prod_{p|k} g(p) / (1 - g(p)).
//
// Every routine is templated on the scalar type: double for sweeps,
// ExactRational for certification.

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "arith.hpp"
#include "euler_product.hpp"
#include "interval_sieve.hpp"
#include "parallel.hpp"
#include "summation.hpp"

namespace sqfree {

using ExactRational = boost::multiprecision::cpp_rational;

inline constexpr double kWeightTableCap = 10'000;
inline constexpr double kExactPathCap = 100;

template <typename Scalar>
double to_double(const Scalar& v) {
    if constexpr (std::is_floating_point_v<Scalar>)
        return static_cast<double>(v);
    else
        return v.template convert_to<double>();
}

template <typename Scalar>
Scalar scalar_abs(const Scalar& v) {
    return v < 0 ? Scalar(-v) : v;
}

// Squarefree k <= limit with their prime factors, from a smallest-prime-factor
// sieve.
class SquarefreeTable {
public:
    explicit SquarefreeTable(u64 limit) : limit_(limit), spf_(limit + 1, 0) {
        for (u64 i = 2; i <= limit; ++i) {
            if (spf_[i]) continue;
            for (u64 j = i; j <= limit; j += i)
                if (!spf_[j]) spf_[j] = static_cast<std::uint32_t>(i);
        }
        for (u64 k = 1; k <= limit; ++k) {
            std::vector<u64> ps;
            u64 rest = k;
            bool sqf = true;
            while (rest > 1) {
                const u64 p = spf_[rest];
                rest /= p;
                if (rest % p == 0) {
                    sqf = false;
                    break;
                }
                ps.push_back(p);
            }
            if (!sqf) continue;
            values_.push_back(k);
            factors_.push_back(std::move(ps));
        }
    }

    u64 limit() const { return limit_; }
    std::size_t size() const { return values_.size(); }
    const std::vector<u64>& values() const { return values_; }
    u64 value(std::size_t i) const { return values_[i]; }
    const std::vector<u64>& primes_of(std::size_t i) const { return factors_[i]; }

    // Number of squarefree values <= y.
    std::size_t count_upto(u64 y) const {
        return static_cast<std::size_t>(std::upper_bound(values_.begin(), values_.end(), y) - values_.begin());
    }

    std::size_t index_of(u64 k) const {
        auto it = std::lower_bound(values_.begin(), values_.end(), k);
        if (it == values_.end() || *it != k) throw std::invalid_argument(std::to_string(k) + " is not a tabulated squarefree value");
        return static_cast<std::size_t>(it - values_.begin());
    }

private:
    u64 limit_;
    std::vector<std::uint32_t> spf_;
    std::vector<u64> values_;
    std::vector<std::vector<u64>> factors_;
};

// Local densities g(p), g(d) and the H-summands, tabulated for k <= limit.
template <typename Scalar>
class SelbergTables {
public:
    SelbergTables(u64 limit, const OffsetTuple& l) : squarefree_(std::max<u64>(limit, 1)) {
        const std::size_t n = squarefree_.size();
        u_.resize(n);
        g_.resize(n);
        term_.resize(n);
        inverse_local_.resize(n);
        std::map<u64, std::pair<u64, Scalar>> prime_cache;  // p -> (u(p), g(p))
        for (std::size_t i = 0; i < n; ++i) {
            u64 u = 1;
            Scalar g = 1, term = 1, inv = 1;
            for (u64 p : squarefree_.primes_of(i)) {
                auto it = prime_cache.find(p);
                if (it == prime_cache.end()) {
                    const u64 up = detail::residue_count_prime(p, l);
                    if (up == p * p)
                        throw degenerate_error("local factor 1 - u(p)/p^2 vanishes at p = " + std::to_string(p));
                    it = prime_cache.emplace(p, std::pair<u64, Scalar>{up, Scalar(up) / Scalar(p * p)}).first;
                }
                const auto& [up, gp] = it->second;
                u *= up;
                g *= gp;
                term *= gp / (Scalar(1) - gp);
                inv *= Scalar(1) / (Scalar(1) - gp);
            }
            u_[i] = u;
            g_[i] = g;
            term_[i] = term;
            inverse_local_[i] = inv;
        }
    }

    const SquarefreeTable& squarefree() const { return squarefree_; }
    u64 u(std::size_t i) const { return u_[i]; }
    const Scalar& g(std::size_t i) const { return g_[i]; }
    const Scalar& term(std::size_t i) const { return term_[i]; }
    // prod_{p|d} (1 - g(p))^{-1}
    const Scalar& inverse_local(std::size_t i) const { return inverse_local_[i]; }

    // H(y, m) for y <= limit.
    Scalar h_sum(u64 y_floor, u64 m) const {
        const std::size_t count = squarefree_.count_upto(y_floor);
        CompensatedSum<Scalar> s;
        for (std::size_t i = 0; i < count; ++i)
            if (m == 1 || std::gcd(squarefree_.value(i), m) == 1) s.add(term_[i]);
        return s.value();
    }

private:
    SquarefreeTable squarefree_;
    std::vector<u64> u_;
    std::vector<Scalar> g_;
    std::vector<Scalar> term_;
    std::vector<Scalar> inverse_local_;
};

inline u64 floor_level(double y) {
    if (!(y >= 1.0)) throw std::invalid_argument("H(y, m): y must be >= 1");
    if (y > kWeightTableCap) throw capacity_error("H(y, m): y exceeds the weight-table cap 10^4");
    return static_cast<u64>(std::floor(y));
}

// H(y, m) for squarefree m.
template <typename Scalar = double>
Scalar h_sum(double y, u64 m, const OffsetTuple& l) {
    const u64 y_floor = floor_level(y);
    if (m == 0 || !factorize(m).squarefree)
        throw std::invalid_argument("H(y, m): m must be squarefree");
    SelbergTables<Scalar> tables(y_floor, l);
    return tables.h_sum(y_floor, m);
}

template <typename Scalar>
struct SelbergSystem {
    SelbergSystem(double z_level, OffsetTuple offsets) : z(z_level), tuple(std::move(offsets)) {}

    double z;
    OffsetTuple tuple;
    std::vector<u64> divisors;      // squarefree d <= z, ascending; divisors[0] = 1
    std::vector<Scalar> weights;    // lambda(d)
    std::vector<u64> u_values;      // u(d)
    std::vector<Scalar> densities;  // g(d) = u(d)/d^2
    std::map<std::pair<u64, u64>, Scalar> h_table;  // (floor(z/d), d) -> H(z/d, d)
    Scalar h_z = 0;
    Scalar v_min = 0;
    Scalar g_value = 0;  // sum |lambda(d)| u(d)
    EulerEstimate density{};
    double a_inverse_lower = 0;
    double a_inverse_upper = 0;
    double omega_lower = 0;  // enclosure of A^{-1} - H(z)
    double omega_upper = 0;

    std::size_t size() const { return divisors.size(); }

    // The system with only lambda(1) = 1 (levels z < 2 admit nothing else).
    static SelbergSystem trivial(double z_level, const OffsetTuple& l, const EulerEstimate& est) {
        SelbergSystem sys(z_level, l);
        sys.divisors = {1};
        sys.weights = {Scalar(1)};
        sys.u_values = {1};
        sys.densities = {Scalar(1)};
        sys.h_z = 1;
        sys.v_min = 1;
        sys.g_value = 1;
        sys.density = est;
        sys.a_inverse_lower = 1.0 / est.upper;
        sys.a_inverse_upper = std::nextafter(1.0 / est.lower, std::numeric_limits<double>::infinity());
        sys.omega_lower = sys.a_inverse_lower - 1;
        sys.omega_upper = sys.a_inverse_upper - 1;
        return sys;
    }

    const Scalar& lambda(u64 d) const {
        auto it = std::lower_bound(divisors.begin(), divisors.end(), d);
        if (it == divisors.end() || *it != d) throw std::out_of_range("lambda: no weight for " + std::to_string(d));
        return weights[static_cast<std::size_t>(it - divisors.begin())];
    }
};

// Builds the optimal weights for level z. `density` must enclose A(l).
template <typename Scalar = double>
SelbergSystem<Scalar> optimal_weights(double z, const OffsetTuple& l, const EulerEstimate& density) {
    if (!(z > 2.0)) throw std::invalid_argument("optimal_weights: z must exceed 2");
    if (z > kWeightTableCap) throw capacity_error("optimal_weights: z exceeds the weight-table cap 10^4");
    if (density.degenerate_zero) throw degenerate_error("optimal_weights: A(l) = 0");

    const u64 z_floor = static_cast<u64>(std::floor(z));
    const SelbergTables<Scalar> tables(z_floor, l);
    const SquarefreeTable& sq = tables.squarefree();

    SelbergSystem<Scalar> sys(z, l);
    sys.density = density;
    sys.a_inverse_lower = 1.0 / density.upper;
    sys.a_inverse_upper = std::nextafter(1.0 / density.lower, std::numeric_limits<double>::infinity());
    sys.h_z = tables.h_sum(z_floor, 1);
    sys.v_min = Scalar(1) / sys.h_z;

    const std::size_t n = sq.size();
    sys.divisors = sq.values();
    sys.weights.resize(n);
    sys.u_values.resize(n);
    sys.densities.resize(n);
    CompensatedSum<Scalar> g_sum;
    for (std::size_t i = 0; i < n; ++i) {
        const u64 d = sq.value(i);
        const u64 level = z_floor / d;  // floor(z/d) = floor(floor(z)/d)
        auto [it, inserted] = sys.h_table.try_emplace({level, d}, Scalar(0));
        if (inserted) it->second = tables.h_sum(level, d);
        Scalar lam = tables.inverse_local(i) * it->second / sys.h_z;
        if (sq.primes_of(i).size() % 2) lam = -lam;
        sys.weights[i] = lam;
        sys.u_values[i] = tables.u(i);
        sys.densities[i] = tables.g(i);
        g_sum.add(scalar_abs(lam) * Scalar(tables.u(i)));
    }
    sys.g_value = g_sum.value();

    const double hz = to_double(sys.h_z);
    sys.omega_lower = sys.a_inverse_lower - hz;
    sys.omega_upper = sys.a_inverse_upper - hz;
    return sys;
}

template <typename Scalar = double>
SelbergSystem<Scalar> optimal_weights(double z, const OffsetTuple& l, u64 prime_cutoff = kDefaultPrimeCutoff,
                                      unsigned threads = 1) {
    if (!(z > 2.0)) throw std::invalid_argument("optimal_weights: z must exceed 2");
    return optimal_weights<Scalar>(z, l, density_constant(l, std::max<u64>(prime_cutoff, 2 * l.r()), threads));
}

// V = sum lambda(d1) lambda(d2) g([d1,d2]) and R = sum |lambda(d1)||lambda(d2)| u([d1,d2]).
template <typename Scalar>
struct QuadraticDensity {
    Scalar v = 0;
    Scalar remainder = 0;
};

template <typename Scalar>
QuadraticDensity<Scalar> quadratic_density(const SelbergSystem<Scalar>& sys, unsigned threads = 1) {
    const std::size_t n = sys.size();
    std::vector<Scalar> v_rows(n), r_rows(n);
    parallel_for(n, threads, [&](std::size_t i) {
        CompensatedSum<Scalar> v, rem;
        const u64 d1 = sys.divisors[i];
        for (std::size_t j = 0; j < n; ++j) {
            const u64 d2 = sys.divisors[j];
            const u64 k = std::gcd(d1, d2);
            const std::size_t gi = static_cast<std::size_t>(
                std::lower_bound(sys.divisors.begin(), sys.divisors.end(), k) - sys.divisors.begin());
            // g and u are multiplicative, so g([d1,d2]) = g(d1) g(d2) / g((d1,d2))
            v.add(sys.weights[i] * sys.weights[j] * (sys.densities[i] * sys.densities[j] / sys.densities[gi]));
            const u64 u_lcm = sys.u_values[i] / sys.u_values[gi] * sys.u_values[j];
            rem.add(scalar_abs(sys.weights[i]) * scalar_abs(sys.weights[j]) * Scalar(u_lcm));
        }
        v_rows[i] = v.value();
        r_rows[i] = rem.value();
    });
    QuadraticDensity<Scalar> out;
    CompensatedSum<Scalar> v, rem;
    for (std::size_t i = 0; i < n; ++i) {
        v.add(v_rows[i]);
        rem.add(r_rows[i]);
    }
    out.v = v.value();
    out.remainder = rem.value();
    return out;
}

struct UpperBoundCertificate {
    Window window;
    std::vector<u64> offsets;
    double z_used = 0;
    double quadratic_form_value = 0;  // sum lambda(d1) lambda(d2) N_{[d1,d2]}(x, h)
    std::optional<u64> exact_count;
    double theorem2_rhs = 0;  // h V_min + R, an unconditional upper bound on the form
    double main_term = 0;     // A(l) h, enclosure midpoint
    std::size_t distinct_moduli = 0;

    static constexpr double kSlop = 1e-6;

    bool holds() const {
        return !exact_count || static_cast<double>(*exact_count) <= quadratic_form_value + kSlop;
    }
};

// Evaluates the Selberg quadratic form with exact N values.
template <typename Scalar>
UpperBoundCertificate quadratic_form_bound(const Window& w, const SelbergSystem<Scalar>& sys, bool with_exact = true,
                                           unsigned threads = 1) {
    const OffsetTuple& l = sys.tuple;
    w.validate(l);
    if (sys.z > kWeightTableCap) throw capacity_error("quadratic_form_bound: weight-table cap exceeded");

    const std::size_t n = sys.size();
    // Distinct least common multiples and their exact counts.
    std::vector<u64> moduli;
    moduli.reserve(n * (n + 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) moduli.push_back(std::lcm(sys.divisors[i], sys.divisors[j]));
    std::sort(moduli.begin(), moduli.end());
    moduli.erase(std::unique(moduli.begin(), moduli.end()), moduli.end());
    std::vector<u64> counts(moduli.size());
    parallel_for(moduli.size(), threads, [&](std::size_t k) { counts[k] = count_congruent(moduli[k], w, l); });
    auto count_of = [&](u64 e) {
        return counts[static_cast<std::size_t>(std::lower_bound(moduli.begin(), moduli.end(), e) - moduli.begin())];
    };

    std::vector<Scalar> rows(n);
    parallel_for(n, threads, [&](std::size_t i) {
        CompensatedSum<Scalar> s;
        for (std::size_t j = 0; j < n; ++j)
            s.add(sys.weights[i] * sys.weights[j] * Scalar(count_of(std::lcm(sys.divisors[i], sys.divisors[j]))));
        rows[i] = s.value();
    });
    CompensatedSum<Scalar> total;
    for (const auto& v : rows) total.add(v);

    UpperBoundCertificate cert;
    cert.window = w;
    cert.offsets.assign(l.offsets().begin(), l.offsets().end());
    cert.z_used = sys.z;
    cert.quadratic_form_value = to_double(total.value());
    cert.distinct_moduli = moduli.size();
    const QuadraticDensity<Scalar> qd = quadratic_density(sys, threads);
    cert.theorem2_rhs = static_cast<double>(w.h) * to_double(sys.v_min) + to_double(qd.remainder);
    cert.main_term = sys.density.midpoint() * static_cast<double>(w.h);
    if (with_exact) cert.exact_count = count_tuples(w, l, {}, threads);
    return cert;
}

// z = h^{1/3} (log h / r)^{-r/3}, without any hypothesis gate.
inline double selberg_level(double h, u64 r) {
    const double rr = static_cast<double>(r);
    return std::cbrt(h) * std::pow(std::log(h) / rr, -rr / 3.0);
}

// rho(h) = 2 log log log h / log log h.
inline double rho_exponent(double h) { return 2.0 * std::log(std::log(std::log(h))) / std::log(std::log(h)); }

struct Theorem2Parameters {
    double z_star = 0;
    double rho = 0;
    double nu = 0;  // 1 + r / log z
    bool nu_ok = false;
    std::optional<bool> z_in_range;  // 2 < z < 2 sqrt(x), when x is known
};

inline Theorem2Parameters theorem2_parameters(double h, u64 r, std::optional<double> x = std::nullopt) {
    if (!(h >= 1e3)) throw std::invalid_argument("theorem2_parameters: requires h >= 10^3");
    if (r < 1) throw std::invalid_argument("theorem2_parameters: requires r >= 1");
    const double r_max = std::log(h) / std::log(std::log(h));
    if (static_cast<double>(r) > r_max)
        throw std::invalid_argument("theorem2_parameters: requires r <= log h / log log h = " + std::to_string(r_max));
    Theorem2Parameters out;
    out.z_star = selberg_level(h, r);
    out.rho = rho_exponent(h);
    out.nu = 1.0 + static_cast<double>(r) / std::log(out.z_star);
    out.nu_ok = out.z_star > 1.0 && out.nu <= 2.0;
    if (x) out.z_in_range = out.z_star > 2.0 && out.z_star < 2.0 * std::sqrt(*x);
    return out;
}

struct WeightMomentBounds {
    double u = 0;        // sum_{d <= z} mu^2(d) r^{nu(d)}
    double u_bound = 0;  // z (2 e r^{-1} log z)^r
    double g = 0;        // sum_{d <= z} |lambda(d)| u(d)
    double g_bound = 0;  // A^{-1} U, using the upper end of the A^{-1} enclosure
    double nu = 0;
    bool applicable = false;  // nu <= 2

    bool u_holds() const { return u <= u_bound; }
    bool g_holds() const { return g <= g_bound * (1 + 1e-12); }
};

template <typename Scalar>
WeightMomentBounds weight_moment_bounds(const SelbergSystem<Scalar>& sys) {
    const double z = sys.z;
    const u64 r = sys.tuple.r();
    const double rr = static_cast<double>(r);
    WeightMomentBounds out;
    out.nu = 1.0 + rr / std::log(z);
    out.applicable = out.nu <= 2.0;
    const SquarefreeTable sq(static_cast<u64>(std::floor(z)));
    CompensatedSum<double> u;
    for (std::size_t i = 0; i < sq.size(); ++i) u.add(std::pow(rr, static_cast<double>(sq.primes_of(i).size())));
    out.u = u.value();
    out.u_bound = z * std::pow(2.0 * std::numbers::e * std::log(z) / rr, rr);
    out.g = to_double(sys.g_value);
    out.g_bound = sys.a_inverse_upper * out.u;
    return out;
}

// omega(z) = A^{-1} - H(z) against A^{-1} U_1 with
// U_1 = sum_{k > z} mu^2(k) r^{nu(k)} / k^2 = prod_p (1 + r/p^2) - sum_{k <= z} ...
struct TailReport {
    double omega_lower = 0;
    double omega_upper = 0;
    double u1_lower = 0;
    double u1_upper = 0;
    double shape = 0;              // z^{-1} (2 e r^{-1} log z)^r
    double measured_constant = 0;  // u1_upper / shape
    bool omega_nonnegative = false;
    bool omega_within_u1 = false;  // omega <= A^{-1} U_1
};

template <typename Scalar>
TailReport tail_report(const SelbergSystem<Scalar>& sys, u64 prime_cutoff = kDefaultPrimeCutoff) {
    const u64 r = sys.tuple.r();
    const double rr = static_cast<double>(r);
    const double z = sys.z;
    TailReport out;
    out.omega_lower = sys.omega_lower;
    out.omega_upper = sys.omega_upper;

    // log prod_{p <= C} (1 + r/p^2), tail over p > C at most r/(C - 1).
    const PrimeTable primes = primes_up_to(prime_cutoff, std::max(prime_cutoff, kDefaultPrimeCap));
    auto term = [rr](u64 p) { return std::log1p(rr / (static_cast<double>(p) * static_cast<double>(p))); };
    const detail::LogSum s = detail::sum_log_terms(primes.primes, term, 1);
    const double full_lower = detail::exp_down(s.sum - s.error);
    const double full_upper = detail::exp_up(s.sum + s.error + rr / static_cast<double>(prime_cutoff - 1));

    const SquarefreeTable sq(static_cast<u64>(std::floor(z)));
    CompensatedSum<double> head;
    for (std::size_t i = 0; i < sq.size(); ++i) {
        const double k = static_cast<double>(sq.value(i));
        head.add(std::pow(rr, static_cast<double>(sq.primes_of(i).size())) / (k * k));
    }
    const double head_v = head.value();
    const double head_slop = 1e-14 * head_v;
    out.u1_lower = std::max(0.0, full_lower - head_v - head_slop);
    out.u1_upper = full_upper - head_v + head_slop;
    out.shape = std::pow(2.0 * std::numbers::e * std::log(z) / rr, rr) / z;
    out.measured_constant = out.u1_upper / out.shape;

    constexpr double kSlop = 1e-12;
    out.omega_nonnegative = out.omega_upper >= -kSlop;
    out.omega_within_u1 = out.omega_lower <= sys.a_inverse_upper * out.u1_upper + kSlop;
    return out;
}

// V(lambda) H(z) == 1 in exact rational arithmetic, for z <= 100.
inline bool certify_minimum_exact(double z, const OffsetTuple& l, const EulerEstimate& density) {
    if (z > kExactPathCap) throw capacity_error("certify_minimum_exact: exact path limited to z <= 100");
    const auto sys = optimal_weights<ExactRational>(z, l, density);
    const auto qd = quadratic_density(sys);
    return qd.v * sys.h_z == ExactRational(1);
}

} // namespace sqfree
