#pragma once

#include <stdexcept>
#include <string>

namespace refclass {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text (CSV cells, config values).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Structural violation of the data model, e.g. duplicate firm-years.
class IntegrityError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Fewer than the minimum number of candidates for a forecast case.
class InsufficientCandidatesError : public Error {
public:
    using Error::Error;
};

/// A selector produced a reference class below the minimum size.
class UndersizedClassError : public Error {
public:
    using Error::Error;
};

/// Numerically degenerate input (constant columns, over-trimmed data).
class DegenerateError : public Error {
public:
    using Error::Error;
};

}  // namespace refclass
