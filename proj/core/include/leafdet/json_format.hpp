#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace leafdet {

/// Fixed-point with at most 6 decimals, trailing zeros dropped:
/// 12.5 -> "12.5", 3.0 -> "3", 0.1234567 -> "0.123457", -0.0 -> "0".
std::string format_decimal(double v);

/// JSON string literal with escapes, e.g. "\"corn_leaf\"".
std::string quote_json(std::string_view s);

/// "[x1,y1,x2,y2]" using format_decimal.
std::string format_box(std::span<const double, 4> coords);

/// Writes to a sibling temporary file and renames it over `path`.
/// Throws IoError on failure.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace leafdet
