#pragma once

#include <cmath>
#include <type_traits>

namespace sqfree {

// Neumaier's variant of Kahan summation. Works for any type with the usual
// arithmetic operators; for exact types the compensation term stays zero.
template <typename T>
class CompensatedSum {
public:
    CompensatedSum() = default;
    explicit CompensatedSum(T init) : sum_(init) {}

    void add(const T& v) {
        if constexpr (std::is_floating_point_v<T>) {
            T t = sum_ + v;
            if (std::fabs(sum_) >= std::fabs(v))
                comp_ += (sum_ - t) + v;
            else
                comp_ += (v - t) + sum_;
            sum_ = t;
        } else {
            sum_ += v;
        }
    }

    CompensatedSum& operator+=(const T& v) {
        add(v);
        return *this;
    }

    T value() const {
        if constexpr (std::is_floating_point_v<T>)
            return sum_ + comp_;
        else
            return sum_;
    }

private:
    T sum_{0};
    T comp_{0};
};

} // namespace sqfree
