#pragma once

#include <stdexcept>
#include <string>

namespace riskmfg {

/// Malformed input or a violated parameter invariant.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical breakdown: Riccati blow-up, explicit-scheme instability, non-finite state.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace riskmfg
