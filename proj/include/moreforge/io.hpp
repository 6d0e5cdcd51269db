#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace moreforge {

/// Whole-file reads and writes; failures raise Io errors.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view bytes);

} // namespace moreforge
