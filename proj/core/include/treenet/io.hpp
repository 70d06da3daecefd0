#pragma once

#include <filesystem>
#include <string>

namespace treenet {

// Shortest decimal representation that round-trips, capped at 17
// significant digits. Locale independent (std::to_chars), so CSV and JSON
// artifacts are byte-stable across runs.
std::string fmt_double(double v);

// Fixed-width variant used where a column should carry full precision
// regardless of the value's magnitude.
std::string fmt_double17(double v);

void ensure_dir(const std::filesystem::path& dir);

// Writes via a temporary file in the same directory followed by a rename,
// so readers never observe a half-written artifact.
void write_text_atomic(const std::filesystem::path& path,
                       const std::string& content);

std::string read_text(const std::filesystem::path& path);

}  // namespace treenet
