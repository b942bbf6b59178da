#pragma once

#include <stdexcept>
#include <string>

namespace fsl {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad arguments or configuration supplied by the caller.
class UsageError : public Error {
public:
    using Error::Error;
};

/// Missing, malformed or insufficient input data.
class DataError : public Error {
public:
    using Error::Error;
};

/// A numerical routine could not produce a valid result (singular matrix,
/// non-finite values, rank deficiency).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Exit codes used by the command-line tool.
enum class ExitCode : int {
    ok = 0,
    usage = 1,
    data = 2,
    numerical = 3,
};

}  // namespace fsl
