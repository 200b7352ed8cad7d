#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace compsem {

/// Lowercase hex SHA-256 of a byte buffer.
std::string sha256_hex(std::span<const std::byte> bytes);
std::string sha256_hex(std::string_view text);

/// Whole file as a string; throws DataError if unreadable.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

std::string to_lower_ascii(std::string_view s);
std::string_view trim(std::string_view s);

/// Splits one CSV record. Double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_csv_line(std::string_view line);

/// Quotes a field if it contains a comma, quote or newline.
std::string csv_escape(std::string_view field);

/// Shortest representation that round-trips a double (machine CSVs).
std::string format_full(double value);
/// Six significant digits (human-facing tables).
std::string format_sig6(double value);

/// Strict numeric parse of the whole string; nullopt-style failure via bool.
bool parse_double(std::string_view text, double& out);
bool parse_int64(std::string_view text, std::int64_t& out);

}  // namespace compsem
