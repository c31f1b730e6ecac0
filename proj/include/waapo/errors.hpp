#pragma once

#include <stdexcept>
#include <string>

namespace waapo {

// Every failure raised by the library derives from Error so callers can
// catch the whole family in one place (the CLI maps subclasses to exit codes).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Two grids (or a grid and a mask / model) disagree on dimensions.
class ShapeError : public Error {
public:
    using Error::Error;
};

// An index (channel, time step) lies outside its valid range.
class RangeError : public Error {
public:
    using Error::Error;
};

// A geometric request (patch, window) does not fit inside the grid.
class BoundsError : public Error {
public:
    using Error::Error;
};

// An argument violates a documented precondition.
class ArgumentError : public Error {
public:
    using Error::Error;
};

// A file was readable but its contents are malformed.
class FormatError : public Error {
public:
    using Error::Error;
};

// The operating system refused a read or write.
class IoError : public Error {
public:
    using Error::Error;
};

// A run configuration is invalid (unknown key, unresolved channel name, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace waapo
