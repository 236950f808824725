#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace zoterag::fs_util {

// Throws Error(kIoError) when the file cannot be read.
std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it over the target. Maps
// ENOSPC to Error(kDiskFull), everything else to Error(kIoError).
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view contents);

}  // namespace zoterag::fs_util
