#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "sqfree/euler_product.hpp"
#include "sqfree/interval_sieve.hpp"

using namespace sqfree;

// Constants from the prime-zeta expansion log A = -sum_k u^k P(2k) / k
// (valid when u(p) = u for every p), evaluated to 30 digits offline.
constexpr double kPairConstant = 0.322634098939244670;    // prod (1 - 2/p^2)
constexpr double kTripleConstant = 0.125486980905809298;  // prod (1 - 3/p^2)

TEST(DensityConstant, SingleOffsetEnclosesInverseZeta2) {
    const double inv_zeta2 = static_cast<double>(1.0L / oracle::zeta2());
    EXPECT_NEAR(inv_zeta2, 0.6079271018540267, 1e-15);
    const EulerEstimate e = density_constant(OffsetTuple{0}, 1'000'000);
    EXPECT_TRUE(e.contains(inv_zeta2)) << e.lower << " " << e.upper;
    EXPECT_FALSE(e.degenerate_zero);
    EXPECT_DOUBLE_EQ(e.tail_log_bound, 2.0 / 999'999.0);
}

TEST(DensityConstant, PairAndTriple) {
    const EulerEstimate pair = density_constant(OffsetTuple{0, 1}, 1'000'000);
    EXPECT_TRUE(pair.contains(kPairConstant));
    EXPECT_TRUE(pair.contains(0.3226341));
    const EulerEstimate triple = density_constant(OffsetTuple{0, 1, 2}, 1'000'000);
    EXPECT_TRUE(triple.contains(kTripleConstant));
}

TEST(DensityConstant, CollapsedResidueRaisesDensity) {
    // u(2) = 1 for <0,4> versus u(2) = 2 for <0,1>; every other factor agrees
    const EulerEstimate a = density_constant(OffsetTuple{0, 4}, 100'000);
    const EulerEstimate b = density_constant(OffsetTuple{0, 1}, 100'000);
    EXPECT_GT(a.lower, b.upper);
}

TEST(DensityConstant, ShiftInvariance) {
    const OffsetTuple l{0, 2, 6, 8};
    const EulerEstimate a = density_constant(l, 200'000);
    const EulerEstimate b = density_constant(l.shifted(123456789), 200'000);
    EXPECT_EQ(a.lower, b.lower);
    EXPECT_EQ(a.upper, b.upper);
}

TEST(DensityConstant, MonotoneInCutoff) {
    const OffsetTuple l{0, 1, 3};
    EulerEstimate prev = density_constant(l, 10);
    for (u64 c : {100ull, 1000ull, 10'000ull, 100'000ull, 1'000'000ull}) {
        const EulerEstimate cur = density_constant(l, c);
        EXPECT_GE(cur.lower, prev.lower) << c;
        EXPECT_LE(cur.upper, prev.upper) << c;
        prev = cur;
    }
}

TEST(DensityConstant, Invariants) {
    for (const OffsetTuple& l : {OffsetTuple{0}, OffsetTuple{0, 1}, OffsetTuple{0, 2, 6}, OffsetTuple{0, 4, 9, 25}}) {
        const EulerEstimate e = density_constant(l, 50'000);
        EXPECT_LE(e.lower, e.upper);
        EXPECT_GE(e.lower, 0.0);
        EXPECT_LE(e.upper, 1.0);
        EXPECT_LE(e.upper / e.lower, std::exp(e.tail_log_bound) * (1 + 1e-9));
    }
}

TEST(DensityConstant, DegenerateTupleIsExactZero) {
    // 0,1,2,3 cover every class mod 4
    const OffsetTuple l{0, 1, 2, 3};
    const EulerEstimate e = density_constant(l, 1000);
    EXPECT_TRUE(e.degenerate_zero);
    EXPECT_EQ(e.lower, 0.0);
    EXPECT_EQ(e.upper, 0.0);
    // and no window contains a squarefree 4-tuple
    EXPECT_EQ(count_tuples(Window{0, 100000}, l), 0u);
    EXPECT_EQ(count_tuples(Window{987654321, 5000}, l), 0u);
}

TEST(DensityConstant, RejectsSmallCutoff) {
    EXPECT_THROW(density_constant(OffsetTuple{0, 1, 2}, 5), std::invalid_argument);
    EXPECT_THROW(density_constant(OffsetTuple{0}, 1), std::invalid_argument);
    EXPECT_NO_THROW(density_constant(OffsetTuple{0, 1, 2}, 6));
}

TEST(DensityConstant, ThreadCountIndependent) {
    const OffsetTuple l{0, 2, 6};
    const EulerEstimate a = density_constant(l, 2'000'000, 1);
    const EulerEstimate b = density_constant(l, 2'000'000, 4);
    EXPECT_EQ(a.lower, b.lower);
    EXPECT_EQ(a.upper, b.upper);
}

TEST(InverseBound, Examples) {
    const InverseBoundCheck one = certify_inverse_bound(OffsetTuple{0}, 1'000'000);
    EXPECT_TRUE(one.applicable);
    EXPECT_NEAR(one.a_inverse_upper, 1.6449341, 1e-5);
    EXPECT_NEAR(one.bound, 8103.083927575384, 1e-9);
    EXPECT_TRUE(one.holds);

    const InverseBoundCheck two = certify_inverse_bound(OffsetTuple{0, 1}, 1'000'000);
    // an upper bound on 1/A, loose by at most the tail factor exp(4/(10^6 - 1))
    EXPECT_GE(two.a_inverse_upper, 1.0 / kPairConstant);
    EXPECT_LE(two.a_inverse_upper, std::exp(4.0 / 999'999.0) / kPairConstant * (1 + 1e-12));
    EXPECT_NEAR(two.a_inverse_upper, 3.100, 1e-3);
    EXPECT_NEAR(two.bound, std::exp(9 * std::sqrt(2.0)), 1e-6);
    EXPECT_TRUE(two.holds);

    EXPECT_FALSE(certify_inverse_bound(OffsetTuple{0, 1, 2, 3}, 1000).applicable);
}

TEST(InverseBound, HoldsForAnySingleOffset) {
    for (u64 o : {0ull, 7ull, 1000000ull}) EXPECT_TRUE(certify_inverse_bound(OffsetTuple{o}, 10'000).holds);
}

TEST(InverseBound, SplitAtSqrt2r) {
    for (u64 r = 1; r <= 10000; r += (r < 100 ? 1 : 97)) {
        const InverseSplitCheck c = inverse_split_check(r);
        ASSERT_TRUE(c.holds) << r;
        ASSERT_LE(c.log_small_product, c.log_small_bound) << r;
        ASSERT_LE(c.tail_sum, c.tail_bound) << r;
    }
    EXPECT_EQ(inverse_split_check(10000).holds, true);
}

TEST(Chebyshev, LogPrimorial) {
    EXPECT_NEAR(log_primorial(10), std::log(210.0), 1e-12);
    for (u64 w = 1; w <= 10000; w += 37) EXPECT_LE(log_primorial(w), static_cast<double>(w) * std::log(4.0));
}
