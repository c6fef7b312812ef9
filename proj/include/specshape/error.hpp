#pragma once

#include <stdexcept>
#include <string>

namespace specshape {

/// Base of every error raised by the library. The CLI maps the subclasses
/// onto its exit codes (I/O 2, rules 3, config 4).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File access, malformed headers, size mismatches, image codec failures.
class IoError : public Error {
public:
    using Error::Error;
};

/// Reference frames that cannot be used to calibrate a cube.
class CalibrationError : public Error {
public:
    using Error::Error;
};

/// Parameter outside its declared range, or mismatched provenance.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Cancellation of a long-running classification.
class Cancelled : public Error {
public:
    Cancelled() : Error("operation cancelled") {}
};

}  // namespace specshape
