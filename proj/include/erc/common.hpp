#pragma once

#include <stdexcept>
#include <string>

namespace erc {

/// Precondition violation: bad arguments, inconsistent configuration.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Numeric failure while iterating (singular solve, blow-up, ...).
/// Carries the iteration index when one is meaningful, -1 otherwise.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg, int iteration = -1)
        : std::runtime_error(msg), iteration_(iteration) {}
    int iteration() const { return iteration_; }

private:
    int iteration_;
};

[[noreturn]] inline void fail_invalid(const std::string& msg) { throw InvalidArgument(msg); }
[[noreturn]] inline void fail_numeric(const std::string& msg, int iteration = -1) {
    throw NumericError(msg, iteration);
}

} // namespace erc

#define ERC_REQUIRE(cond, msg)                                                                     \
    do {                                                                                           \
        if (!(cond)) ::erc::fail_invalid(msg);                                                     \
    } while (0)
