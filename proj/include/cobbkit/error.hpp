#pragma once

#include <stdexcept>
#include <string>

namespace cobbkit {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input bytes. Carries a 1-based line number when one is known.
class ParseError : public Error {
public:
    explicit ParseError(const std::string& what, long line = 0)
        : Error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what),
          line_(line) {}
    long line() const noexcept { return line_; }

private:
    long line_ = 0;
};

// Well-formed bytes describing an impossible object (wrong counts, bad grouping).
class StructureError : public Error {
public:
    using Error::Error;
};

// A field holds a value outside its domain (non-finite coordinate, spacing <= 0, ...).
class ValueError : public Error {
public:
    using Error::Error;
};

// Tensor or vector dimensions do not line up.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Geometry that cannot be processed (coincident endplate landmarks, overlapping vertebrae).
class GeometryError : public Error {
public:
    using Error::Error;
};

}  // namespace cobbkit
