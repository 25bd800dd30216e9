#pragma once

#include <stdexcept>

namespace tsa {

/// Malformed external input: dates, CSV layout, missing columns.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A diagnostic cannot be computed for the data (zero variance, too few
/// points, singular regression).
class DiagnosticError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// No usable model could be produced (too little data, optimizer failure, divergence).
class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Pipeline configuration that is malformed or internally inconsistent.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace tsa
