#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sqa::detail {

// Shortest "%.*g" representation that parses back to the same double.
std::string format_double(double value);
std::string format_fixed(double value, int decimals);

// One CSV line into fields; supports double-quoted fields with "" escapes.
std::vector<std::string> split_csv_line(std::string_view line);
std::string csv_escape(std::string_view field);

std::optional<double> parse_double(std::string_view text);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace sqa::detail
