#pragma once

#include <filesystem>
#include <string_view>

namespace acpkan {

/// Writes `contents` to `path` through a sibling temporary file and a rename,
/// so readers never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace acpkan
