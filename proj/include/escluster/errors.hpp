#pragma once

#include <stdexcept>
#include <string>

namespace escluster {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// File size / shape does not match the declared dimensions.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Non-finite or otherwise invalid values in the data itself.
class DataError : public Error {
public:
    using Error::Error;
};

// Text input that cannot be parsed.
class ParseError : public Error {
public:
    using Error::Error;
};

// Out-of-range or inconsistent runtime parameters.
class ParameterError : public Error {
public:
    using Error::Error;
};

// Binary file with a bad magic, version, or truncation.
class FormatError : public Error {
public:
    using Error::Error;
};

// Input that is structurally valid but degenerate (e.g. a zero-norm row).
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

// A documented call precondition was violated.
class PreconditionError : public Error {
public:
    using Error::Error;
};

// Model/feature schema mismatch between training and inference.
class SchemaError : public Error {
public:
    using Error::Error;
};

}  // namespace escluster
