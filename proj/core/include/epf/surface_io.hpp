#pragma once

#include "epf/common.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace epf {

/// `timestamp,q0.025,...` with one row per 5-minute step.
void write_surface_csv(const std::filesystem::path& path, const QuantileSurface& surface);

/// Reads a surface written by write_surface_csv. Rows must be consecutive 5-minute
/// steps; level headers must be `q<level>`.
QuantileSurface read_surface_csv(const std::filesystem::path& path);

/// Named columns over a contiguous 5-minute grid.
struct ColumnTable {
    Timestamp start{};
    std::vector<std::string> names;
    std::vector<std::vector<double>> columns;

    [[nodiscard]] std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
    /// Column by name; throws ParseError when absent.
    [[nodiscard]] const std::vector<double>& column(const std::string& name) const;
};

void write_columns_csv(const std::filesystem::path& path, const ColumnTable& table);
ColumnTable read_columns_csv(const std::filesystem::path& path);

}  // namespace epf
