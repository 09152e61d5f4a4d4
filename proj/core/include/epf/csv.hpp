#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace epf::csv {

/// A parsed CSV file: header plus rows of raw fields. Line numbers are 1-based file lines.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;

    /// Column position by name; throws ParseError if absent.
    [[nodiscard]] std::size_t column(std::string_view name) const;
};

/// Reads a comma-separated file with a header line. Blank lines and lines starting
/// with '#' are skipped. Throws ParseError on I/O failure or ragged rows.
Table read(const std::filesystem::path& path);

std::vector<std::string> split(std::string_view line, char sep = ',');
std::string_view trim(std::string_view s);

/// Strict double parse (whole field must be consumed). Throws ParseError naming `context`.
double parse_double(std::string_view field, std::string_view context);

/// Shortest representation that round-trips to the identical double; "nan" for NaN.
std::string format_double(double v);

/// Opens `path` for writing, creating parent directories. Throws Error on failure.
std::ofstream open_output(const std::filesystem::path& path);

}  // namespace epf::csv
