#pragma once

#include <stdexcept>
#include <string>

namespace alner {

// Invalid configuration or invariant violation; CLI maps this to exit code 1.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Unreadable, malformed or inconsistent data; CLI maps this to exit code 2.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace alner
