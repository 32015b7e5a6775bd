#pragma once

#include <stdexcept>
#include <string>

namespace cropfuse {

/// Malformed or inconsistent input data (files, records, taxonomy).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// NaN/Inf produced during a numerical computation.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace cropfuse
