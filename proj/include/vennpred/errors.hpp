#pragma once

#include <stdexcept>
#include <string>

namespace vennpred {

/// Malformed or inconsistent input data (CSV contents, dimensions, labels).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A computation could not produce a finite result.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace vennpred
