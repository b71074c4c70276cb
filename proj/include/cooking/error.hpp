#pragma once

#include <stdexcept>
#include <string>

namespace cooking {

/// Base class for every error raised by the cooking library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input document (knowledge file, model, config, wire line).
class ParseError : public Error {
public:
    ParseError(const std::string& what, int line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

/// Well-formed input that violates a data invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Lookup of a category, doneness, device or token that does not exist.
class NotFoundError : public Error {
public:
    using Error::Error;
};

/// Temperature outside the accepted [32, 572] °F window.
class OutOfRangeError : public Error {
public:
    using Error::Error;
};

/// Operation not allowed in the current state (e.g. arming at_target with no target).
class StateError : public Error {
public:
    using Error::Error;
};

/// Unknown or missing access token.
class AuthorizationError : public Error {
public:
    using Error::Error;
};

/// Socket or HTTP failure talking to a peer.
class TransportError : public Error {
public:
    using Error::Error;
};

}  // namespace cooking
