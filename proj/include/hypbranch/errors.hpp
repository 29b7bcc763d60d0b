#pragma once

#include <stdexcept>
#include <string>

namespace hypbranch {

// Malformed input: unknown letters, bad configuration values, mixed groups.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A configured resource cap (vertex count, support size, matrix dimension)
// would be exceeded.
class CapExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A quantity cannot be certified exact inside the enumerated ball.
class Uncertified : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Dehn reduction or shortlex search ran past its step budget.
class ReductionBudgetExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace hypbranch
