#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace emowb {

/// Lower-case hex SHA-256 of the bytes.
std::string sha256_hex(std::string_view bytes);

/// Hash of the canonical (sorted-key, compact) JSON dump.
std::string json_digest(const nlohmann::json& value);

/// Short stable identifier: prefix + first 12 hex chars of sha256(material).
std::string short_id(std::string_view prefix, std::string_view material);

/// Shortest round-trip decimal text for a double; NaN prints as "nan".
std::string format_double(double value);

/// Stable JSON dump used for every persisted artifact (2-space indent,
/// trailing newline) so files diff cleanly and compare byte-for-byte.
std::string dump_pretty(const nlohmann::json& value);

}  // namespace emowb
