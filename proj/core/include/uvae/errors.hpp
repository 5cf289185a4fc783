#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace uvae {

/// Violation of a documented precondition (caller bug).
struct ContractError : std::logic_error {
    explicit ContractError(const std::string& what) : std::logic_error(what) {}
};

/// A computation produced a non-finite value or otherwise failed numerically.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input file; `offset` is the byte position of the offending data.
struct ParseError : std::runtime_error {
    ParseError(const std::string& what, std::size_t offset_)
        : std::runtime_error(what + " (byte offset " + std::to_string(offset_) + ")"),
          offset(offset_) {}
    std::size_t offset;
};

/// Bad or unknown configuration field.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace uvae
