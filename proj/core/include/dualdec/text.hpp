#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace dualdec {

using Token = std::string;
using Tokens = std::vector<Token>;

std::string_view trim(std::string_view s);

/// Splits on runs of ASCII whitespace; never yields empty tokens.
Tokens split_tokens(std::string_view s);

std::string join_tokens(const Tokens& tokens);

/// Reads a whole UTF-8 text file line by line (trailing '\r' removed).
/// Throws IoError when the file cannot be opened.
std::vector<std::string> read_lines(const std::filesystem::path& path);

/// Writes `content` to `path`, throwing IoError on failure.
void write_file(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

}  // namespace dualdec
