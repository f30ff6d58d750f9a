#pragma once

#include <stdexcept>
#include <string>

namespace gsdnet {

// Iterative numerics failed to reach tolerance (carries the residual in the message).
class convergence_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A computation produced a non-finite value or an otherwise unusable result.
class numeric_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class io_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace gsdnet
