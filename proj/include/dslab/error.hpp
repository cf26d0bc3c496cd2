#pragma once

#include <stdexcept>
#include <string>

namespace dslab {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Input could not be parsed or violates a type invariant.
struct InvalidInput : Error {
    using Error::Error;
};

/// A configured search or matrix budget would be exceeded. The message
/// carries a remediation hint for the CLI.
struct BudgetExceeded : Error {
    using Error::Error;
};

/// A labeled sample is not consistent with any hypothesis of the class.
struct NotRealizable : Error {
    using Error::Error;
};

/// An internal cross-check failed (would indicate a bug).
struct InvariantViolation : Error {
    using Error::Error;
};

} // namespace dslab
