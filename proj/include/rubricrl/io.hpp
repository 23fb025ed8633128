#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace rubricrl {

std::string read_text_file(const std::filesystem::path& path);

// Writes to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

void append_line(const std::filesystem::path& path, std::string_view line);

// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

std::string_view trim(std::string_view s);

// ASCII lowercase with whitespace runs collapsed to one space, trimmed.
std::string normalize_text(std::string_view s);

std::vector<std::string> split_words(std::string_view s);

std::string format_double(double value, int precision = 6);

// Writes "warning: <message>" to stderr, one line at a time.
void warn(std::string_view message);

} // namespace rubricrl
