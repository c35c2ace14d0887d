#pragma once

#include <stdexcept>
#include <string>

namespace trb {

// Base class for every domain error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidModulusError : public Error {
public:
    using Error::Error;
};

class NotInvertibleError : public Error {
public:
    using Error::Error;
};

class InvalidDifficultyError : public Error {
public:
    using Error::Error;
};

class UnderflowError : public Error {
public:
    using Error::Error;
};

class OverflowError : public Error {
public:
    using Error::Error;
};

class TimeInPastError : public Error {
public:
    using Error::Error;
};

class IntegrityError : public Error {
public:
    using Error::Error;
};

class DegenerateCollisionError : public Error {
public:
    using Error::Error;
};

class MiningExhaustedError : public Error {
public:
    using Error::Error;
};

class CancelledError : public Error {
public:
    using Error::Error;
};

class NonceTooLargeError : public Error {
public:
    using Error::Error;
};

// Solution rejected by the validation algorithm. `step` names the first
// check that failed so callers can report which rule was violated.
class InvalidSolutionError : public Error {
public:
    enum class Step {
        Malformed,       // solution fields out of representable range
        NonceRule,       // single walk application of the nonce does not
                         // reproduce the committed collision value
        Degenerate,      // b-exponent difference is 0 mod n
        KeyMismatch,     // derived key does not pair with the public key
    };

    InvalidSolutionError(Step step, const std::string& what)
        : Error(what), step(step) {}

    Step step;
};

class InvalidBlockError : public Error {
public:
    using Error::Error;
};

class EmptyBlockError : public Error {
public:
    using Error::Error;
};

class NoKeyError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

}  // namespace trb
