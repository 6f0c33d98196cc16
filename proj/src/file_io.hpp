#pragma once

#include <string>

namespace avsync::detail {

std::string read_file(const std::string& path);

// Write-temp-then-rename so readers never observe a half-written file.
void atomic_write_file(const std::string& path, const std::string& contents);

std::string format_seconds(double seconds);  // fixed 6 decimals

}  // namespace avsync::detail
