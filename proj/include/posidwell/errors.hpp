#pragma once

#include <stdexcept>
#include <string>

namespace posidwell {

/// Base class for all library errors.
class error : public std::runtime_error {
public:
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Incompatible matrix or vector dimensions.
class dimension_error : public error {
public:
    explicit dimension_error(const std::string& msg) : error(msg) {}
};

/// Input outside the mathematical domain of an operation (wrong sign
/// pattern, singular matrix, non-finite entry).
class domain_error : public error {
public:
    explicit domain_error(const std::string& msg) : error(msg) {}
};

/// Invalid option or argument combination.
class parameter_error : public error {
public:
    explicit parameter_error(const std::string& msg) : error(msg) {}
};

/// Operation not defined for the requested dwell regime, or a regime
/// precondition fails.
class regime_error : public error {
public:
    explicit regime_error(const std::string& msg) : error(msg) {}
};

/// Malformed structured input (problem files, controller files).
class validation_error : public error {
public:
    explicit validation_error(const std::string& msg) : error(msg) {}
};

/// Filesystem or stream failure.
class io_error : public error {
public:
    explicit io_error(const std::string& msg) : error(msg) {}
};

/// The LP solver failed to converge or hit its iteration cap.
class solver_error : public error {
public:
    explicit solver_error(const std::string& msg) : error(msg) {}
};

/// A threshold search found no crossing inside its bracket.
class no_finite_threshold : public error {
public:
    explicit no_finite_threshold(const std::string& msg) : error(msg) {}
};

/// Numerical integration of a trajectory failed to reach tolerance.
class simulation_error : public error {
public:
    explicit simulation_error(const std::string& msg) : error(msg) {}
};

} // namespace posidwell
