// SPDX-License-Identifier: Apache-2.0
#include <retouch/error.hpp>

namespace retouch
{

std::string_view to_string(ErrorKind kind) noexcept
{
    switch (kind)
    {
        case ErrorKind::MalformedHeader: return "malformed_header";
        case ErrorKind::TruncatedPayload: return "truncated_payload";
        case ErrorKind::UnsupportedMaxval: return "unsupported_maxval";
        case ErrorKind::InvalidSample: return "invalid_sample";
        case ErrorKind::BadMagic: return "bad_magic";
        case ErrorKind::SizeMismatch: return "size_mismatch";
        case ErrorKind::NonFiniteValue: return "non_finite_value";
        case ErrorKind::InvalidArgument: return "invalid_argument";
        case ErrorKind::DimensionMismatch: return "dimension_mismatch";
        case ErrorKind::ZeroSum: return "zero_sum";
        case ErrorKind::ZeroVariance: return "zero_variance";
        case ErrorKind::EmptyInput: return "empty_input";
        case ErrorKind::OutOfBounds: return "out_of_bounds";
        case ErrorKind::MalformedJson: return "malformed_json";
        case ErrorKind::UnknownCategory: return "unknown_category";
        case ErrorKind::UnmatchedRegion: return "unmatched_region";
        case ErrorKind::Transport: return "transport";
        case ErrorKind::HttpStatus: return "http_status";
        case ErrorKind::SchemaViolation: return "schema_violation";
        case ErrorKind::Timeout: return "timeout";
        case ErrorKind::NoToolAvailable: return "no_tool_available";
    }
    return "unknown";
}

} // namespace retouch
