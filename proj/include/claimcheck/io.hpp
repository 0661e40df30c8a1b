#pragma once

#include <fstream>
#include <functional>
#include <string>

namespace claimcheck {

/// Opens for reading or throws IoError.
std::ifstream open_input(const std::string& path);
/// Opens (truncating) for writing or throws IoError.
std::ofstream open_output(const std::string& path);

/// Calls `fn(line, line_number)` for every non-blank line.
void for_each_line(std::istream& in, const std::function<void(const std::string&, std::size_t)>& fn);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);
std::string sha256_hex(const std::string& bytes);

}  // namespace claimcheck
