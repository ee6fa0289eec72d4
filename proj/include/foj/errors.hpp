#pragma once

#include <stdexcept>

namespace foj {

// Raised when an iteration produces non-finite values; the CLI maps this to
// exit code 2 (bad input stays on code 1).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace foj
