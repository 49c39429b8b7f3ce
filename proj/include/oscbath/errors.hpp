#pragma once

#include <stdexcept>
#include <string>

namespace oscbath {

// Error taxonomy shared across modules. Precondition violations on plain
// arguments use std::invalid_argument directly.

struct InvalidSpecError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UnsupportedModeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ResourceLimitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InsufficientDecayError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace oscbath
