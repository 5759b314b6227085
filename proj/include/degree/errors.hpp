#pragma once

#include <stdexcept>
#include <string>

namespace degree {

/// Shape mismatch between operands (reports both shapes in the message).
class dimension_error : public std::invalid_argument {
public:
    explicit dimension_error(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Rejected generator or run configuration (zero node counts, negative ratios, ...).
class config_error : public std::invalid_argument {
public:
    explicit config_error(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Malformed input file; the message carries whatever line/field context is known.
class parse_error : public std::runtime_error {
public:
    explicit parse_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Structurally well-formed input that violates a documented invariant.
class validation_error : public std::runtime_error {
public:
    explicit validation_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure: divergent training, degenerate softmax rows, undefined AUC.
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace degree
