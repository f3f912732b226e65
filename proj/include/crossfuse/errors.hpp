#pragma once

#include <stdexcept>
#include <string>

namespace crossfuse {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tensor shapes or channel counts do not agree.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Convolution geometry yields an empty or fractional output.
class GeometryError : public Error {
public:
    using Error::Error;
};

/// Backward called with state that does not belong to the forward pass.
class StaleStateError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// NetworkSpec failed validation.
class SpecError : public Error {
public:
    using Error::Error;
};

/// Checkpoint content does not match its stored checksum, or is structurally broken.
class ChecksumError : public Error {
public:
    using Error::Error;
};

/// Checkpoint was produced for a different format version or network layout.
class VersionError : public Error {
public:
    using Error::Error;
};

/// Binary file structure is invalid.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Text file could not be parsed.
class ParseError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// A metric is mathematically undefined for the given data.
class MetricError : public Error {
public:
    using Error::Error;
};

/// Inputs required by a network mode or command are missing.
class ContractError : public Error {
public:
    using Error::Error;
};

/// Training produced a non-finite loss or gradient.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, long iteration)
        : Error(what), iteration_(iteration) {}
    long iteration() const noexcept { return iteration_; }

private:
    long iteration_;
};

}  // namespace crossfuse
