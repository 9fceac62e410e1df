#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mmdoc::util {

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> content);

std::vector<std::string_view> split(std::string_view text, char delim);
std::string_view trim(std::string_view text);

/// Lowercase hex SHA-256 of the given bytes.
std::string sha256_hex(std::string_view bytes);

/// Shortest decimal form that round-trips to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);

}  // namespace mmdoc::util
