#pragma once

#include <stdexcept>
#include <string>

namespace oct {

// Root of every error thrown by the library. Each subclass maps onto one
// CLI exit-code family (see tools/octrestore.cpp).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ArgumentError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Raised when a loss becomes non-finite during training.
class TrainingError : public Error {
public:
    using Error::Error;
};

class CalibrationError : public Error {
public:
    using Error::Error;
};

class SamplingError : public Error {
public:
    using Error::Error;
};

// A metric or loss whose defining ratio has a zero denominator.
class DegenerateError : public Error {
public:
    using Error::Error;
};

}  // namespace oct
