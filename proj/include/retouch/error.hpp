// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace retouch
{

/// Classification attached to every domain error raised by the library.
enum class ErrorKind
{
    // media-io
    MalformedHeader,
    TruncatedPayload,
    UnsupportedMaxval,
    InvalidSample,
    BadMagic,
    SizeMismatch,
    NonFiniteValue,
    // numeric preconditions
    InvalidArgument,
    DimensionMismatch,
    ZeroSum,
    ZeroVariance,
    EmptyInput,
    OutOfBounds,
    // dataset
    MalformedJson,
    UnknownCategory,
    UnmatchedRegion,
    // providers
    Transport,
    HttpStatus,
    SchemaViolation,
    Timeout,
    NoToolAvailable,
};

[[nodiscard]] std::string_view to_string(ErrorKind kind) noexcept;

class Error: public std::runtime_error
{
  public:
    Error(ErrorKind kind, const std::string& message):
        std::runtime_error(message), _kind(kind)
    {
    }

    Error(ErrorKind kind, const std::string& message, std::size_t line):
        std::runtime_error(message), _kind(kind), _line(line)
    {
    }

    [[nodiscard]] ErrorKind kind() const noexcept { return _kind; }

    /// 1-based input line for errors raised while parsing line-oriented files.
    [[nodiscard]] std::optional<std::size_t> line() const noexcept { return _line; }

  private:
    ErrorKind _kind;
    std::optional<std::size_t> _line;
};

} // namespace retouch
