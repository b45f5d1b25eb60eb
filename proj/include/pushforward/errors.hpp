#pragma once

#include <stdexcept>
#include <string>

namespace pushforward {

// Every failure raised by the library derives from Error so callers (the CLI
// in particular) can map categories onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidPoint : public Error {
public:
    using Error::Error;
};

class ParameterError : public Error {
public:
    using Error::Error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class SpaceMismatch : public Error {
public:
    using Error::Error;
};

class UnsupportedSpace : public Error {
public:
    using Error::Error;
};

class NotPeriodic : public Error {
public:
    using Error::Error;
};

class ConvergenceFailure : public Error {
public:
    using Error::Error;
};

class EstimateInvalid : public Error {
public:
    using Error::Error;
};

/// Point left the truncation window of a partial map (the finite shift).
class EscapedPoint : public Error {
public:
    using Error::Error;
};

}  // namespace pushforward
