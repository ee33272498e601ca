#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ngash {

// Shortest decimal form that parses back to the identical double.
std::string format_double(double value);

// Parses whitespace-separated doubles; throws ParseError naming `line_no`.
std::vector<double> parse_doubles(std::string_view text, std::size_t line_no);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path);

// FNV-1a, 64 bit.
std::uint64_t fnv1a(std::span<const std::uint8_t> bytes,
                    std::uint64_t seed = 0xcbf29ce484222325ull);
std::string hex64(std::uint64_t value);

std::string trim(std::string_view s);

}  // namespace ngash
