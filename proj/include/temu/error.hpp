#pragma once

#include <stdexcept>
#include <string>

namespace temu {

// Error taxonomy shared by library and CLI. The CLI maps each class to a
// distinct process exit code (see tools/).

/// Bad caller input: shape mismatch, out-of-range mode, invalid bounds.
class ArgumentError : public std::invalid_argument {
public:
    explicit ArgumentError(const std::string& what) : std::invalid_argument(what) {}
};

/// Numerical breakdown: failed factorization, non-finite intermediate.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Model training failure (diverging loss, singular kernel after nugget).
class TrainingError : public std::runtime_error {
public:
    explicit TrainingError(const std::string& what) : std::runtime_error(what) {}
};

/// Refusal to allocate an unreasonably large object without --force.
class ResourceError : public std::runtime_error {
public:
    explicit ResourceError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed or schema-violating configuration / input file.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem / format errors on data files.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace temu
