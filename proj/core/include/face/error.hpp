#pragma once

#include <stdexcept>
#include <string>

namespace face {

// All recoverable failures in the library surface as this type. Callers that
// need to tell cases apart match on the message; the CLI maps it to exit 1.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Argument outside the mathematical domain of a function (log of 0, etc).
class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error(what) {}
};

}  // namespace face
