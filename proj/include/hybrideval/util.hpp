#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace hybrideval {

/// Lowercase hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temp file and renames it into place.
/// Throws Error(Report) when the destination cannot be written.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

/// Decimal half-up rounding to `decimals` places, applied to the shortest
/// decimal representation of `value` (so 0.285 becomes "0.29", 0.9925 "0.99").
std::string format_half_up(double value, int decimals);

/// Splits one CSV line on commas. Fields are not quoted in any of the
/// interchange formats; a quote character is rejected by the callers.
std::vector<std::string> split_csv_line(std::string_view line);

/// Strict numeric parsing; returns false on trailing garbage or empty input.
bool parse_double(std::string_view text, double& out);
bool parse_int(std::string_view text, long long& out);

std::string trim(std::string_view text);

}  // namespace hybrideval
