#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spectra {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A point lies outside the domain of a function.
class DomainError : public Error {
public:
    using Error::Error;
};

/// An operation received an empty input sequence.
class EmptyInputError : public Error {
public:
    using Error::Error;
};

/// Inconsistent sizes, e.g. more constraints than unknowns.
class SizeError : public Error {
public:
    using Error::Error;
};

/// A sampled function returned a non-finite value.
class EvaluationError : public Error {
public:
    using Error::Error;
};

/// An adaptive procedure hit its degree cap before the tail test passed.
class UnresolvedError : public Error {
public:
    UnresolvedError(const std::string& what, std::size_t cap) : Error(what), cap_(cap) {}
    [[nodiscard]] std::size_t cap() const noexcept { return cap_; }

private:
    std::size_t cap_;
};

/// The problem has no unique solution (singular discretization, zero leading coefficient, ...).
class IllPosedError : public Error {
public:
    using Error::Error;
};

/// A factorization found a numerically zero pivot.
class SingularSystemError : public IllPosedError {
public:
    SingularSystemError(const std::string& what, std::size_t column)
        : IllPosedError(what), column_(column) {}
    [[nodiscard]] std::size_t column() const noexcept { return column_; }

private:
    std::size_t column_;
};

/// The two pencils of a two-term Sylvester equation share (numerically) an eigenvalue pair.
class NonUniqueSolutionError : public IllPosedError {
public:
    using IllPosedError::IllPosedError;
};

/// Constraint rows are linearly dependent.
class DependentConstraintsError : public IllPosedError {
public:
    using IllPosedError::IllPosedError;
};

/// Boundary data violate the corner compatibility conditions.
class CompatibilityError : public IllPosedError {
public:
    CompatibilityError(const std::string& what, double defect) : IllPosedError(what), defect_(defect) {}
    [[nodiscard]] double defect() const noexcept { return defect_; }

private:
    double defect_;
};

/// A predicted allocation exceeds the configured memory cap.
class ResourceError : public Error {
public:
    using Error::Error;
};

/// A structural invariant that must hold exactly was violated.
class InternalConsistencyError : public Error {
public:
    using Error::Error;
};

/// Malformed operator or boundary-condition text.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : Error(what + " (at offset " + std::to_string(offset) + ")"), offset_(offset) {}
    [[nodiscard]] std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// An expression is not linear in the unknown.
class NonlinearityError : public Error {
public:
    using Error::Error;
};

/// A problem or result document does not follow the schema.
class SchemaError : public Error {
public:
    using Error::Error;
};

}  // namespace spectra
