#pragma once

#include <stdexcept>
#include <string>

namespace clir {

/// Invalid or inconsistent input data: malformed records, broken invariants,
/// corrupted files. The CLI maps this to exit code 2.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller misuse: bad arguments, violated preconditions on parameters.
/// The CLI maps this to exit code 1.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace clir
