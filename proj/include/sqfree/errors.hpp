#pragma once

#include <stdexcept>
#include <string>

namespace sqfree {

// Precondition failures on user-supplied parameters map to std::invalid_argument
// and std::out_of_range. The types below cover the remaining failure classes.

// A local factor 1 - u(p)/p^2 vanishes, so A(l) = 0 and the sieve objects
// built from it are undefined.
class degenerate_error : public std::domain_error {
public:
    explicit degenerate_error(const std::string& what) : std::domain_error(what) {}
};

// A configured memory or table-size cap would be exceeded.
class capacity_error : public std::length_error {
public:
    explicit capacity_error(const std::string& what) : std::length_error(what) {}
};

// An internal mathematical contract (an inequality that must hold) failed.
class contract_error : public std::logic_error {
public:
    explicit contract_error(const std::string& what) : std::logic_error(what) {}
};

} // namespace sqfree
