#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace colloc {

// splitmix64 finalizer; used to derive independent seeds from structured keys.
std::uint64_t mix64(std::uint64_t x) noexcept;
std::uint64_t combine_seed(std::uint64_t a, std::uint64_t b) noexcept;
std::uint64_t hash_string(std::string_view s) noexcept;  // FNV-1a 64

std::string hex64(std::uint64_t v);

// Shortest round-trip-ish label for an alpha value: "0", "1.4", "inf".
std::string format_alpha(double alpha);
// Accepts decimal numbers and "inf"/"infinity" (case-insensitive).
double parse_alpha(std::string_view text);

// Full-precision decimal rendering used for CSV outputs.
std::string format_double(double v);
double parse_double(std::string_view text);
long long parse_int(std::string_view text);

std::vector<std::string> split(std::string_view s, char sep);
std::vector<std::string> split_whitespace(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
bool is_ascii(std::string_view s);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);
std::vector<std::string> read_lines(const std::filesystem::path& path);

}  // namespace colloc
