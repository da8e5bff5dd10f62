#pragma once

#include <stdexcept>
#include <string>

namespace mirth {

/// Bad invocation: unknown flag, invalid parameter value, unsupported combination.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input data could not be read or violates its schema.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A computation failed at runtime (e.g. training diverged).
class RuntimeFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace mirth
