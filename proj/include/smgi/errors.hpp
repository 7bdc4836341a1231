#pragma once

#include <stdexcept>
#include <string>

namespace smgi {

// Base for all library errors. Subclasses name the contract that was broken.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Two environments are not comparable under the requested metric.
class DomainMismatch : public Error {
public:
    explicit DomainMismatch(const std::string& what) : Error(what) {}
};

// Transformation moves no sampled environment, so Lipschitz ratios are undefined.
class DegenerateTransform : public Error {
public:
    explicit DegenerateTransform(const std::string& what) : Error(what) {}
};

// Admissible set (or constraint set intersected with the simplex) is empty.
class EmptyAdmissibleSet : public Error {
public:
    explicit EmptyAdmissibleSet(const std::string& what) : Error(what) {}
};

// A memory rule attempted to drop an item pinned by a protected-core constraint.
class ProtectedItemRemoved : public Error {
public:
    explicit ProtectedItemRemoved(const std::string& what) : Error(what) {}
};

// State fell outside a kernel's declared domain.
class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error(what) {}
};

// An evaluator produced a loss outside [0,1].
class EvaluatorError : public Error {
public:
    explicit EvaluatorError(const std::string& what) : Error(what) {}
};

// Bounded counter left its 64-bit range.
class CounterOverflow : public Error {
public:
    explicit CounterOverflow(const std::string& what) : Error(what) {}
};

// Malformed or rejected run configuration (unknown fields, bad values).
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what) {}
};

} // namespace smgi
