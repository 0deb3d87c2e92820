#pragma once

#include <stdexcept>
#include <string>

namespace fgsm {

// Every library failure derives from Error so callers can catch one type.
// The CLI maps the concrete kinds onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Incompatible tensor or layer shapes.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A value outside the documented domain of an argument.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Malformed, truncated or unsupported file contents.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Filesystem or dataset content problems (missing directories, empty sets).
class DataError : public Error {
public:
    using Error::Error;
};

/// An object used out of sequence, e.g. a forward trace replayed on another network.
class StateError : public Error {
public:
    using Error::Error;
};

} // namespace fgsm
