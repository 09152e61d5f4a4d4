#include "epf/surface_io.hpp"

#include "epf/csv.hpp"

namespace epf {

namespace {

// Checks that data rows sit on consecutive 5-minute steps and returns the first stamp.
Timestamp grid_start(const csv::Table& table, const std::filesystem::path& path) {
    if (table.rows.empty()) return Timestamp{};
    const Timestamp start = parse_timestamp(table.rows.front()[0]);
    for (std::size_t r = 1; r < table.rows.size(); ++r) {
        if (parse_timestamp(table.rows[r][0]) != start + kStep * static_cast<long>(r)) {
            throw ParseError(path.string() + ":" + std::to_string(table.line_numbers[r]) +
                             ": rows are not consecutive 5-minute steps");
        }
    }
    return start;
}

}  // namespace

void write_surface_csv(const std::filesystem::path& path, const QuantileSurface& surface) {
    auto out = csv::open_output(path);
    out << "timestamp";
    for (const double q : surface.levels) out << ",q" << csv::format_double(q);
    out << '\n';
    for (std::size_t r = 0; r < surface.rows(); ++r) {
        out << format_timestamp(surface.time_at(r));
        for (const double v : surface.row(r)) out << ',' << csv::format_double(v);
        out << '\n';
    }
}

QuantileSurface read_surface_csv(const std::filesystem::path& path) {
    const auto table = csv::read(path);
    if (table.header.size() < 2 || table.header[0] != "timestamp") {
        throw ParseError(path.string() + ": expected a timestamp column followed by quantile columns");
    }
    std::vector<double> levels;
    for (std::size_t c = 1; c < table.header.size(); ++c) {
        const auto& h = table.header[c];
        if (h.size() < 2 || h[0] != 'q') throw ParseError(path.string() + ": bad level header '" + h + "'");
        levels.push_back(csv::parse_double(std::string_view(h).substr(1), path.string() + " header"));
    }
    QuantileSurface s(grid_start(table, path), levels, table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        for (std::size_t c = 0; c < levels.size(); ++c) {
            s.at(r, c) = csv::parse_double(table.rows[r][c + 1],
                                           path.string() + ":" + std::to_string(table.line_numbers[r]));
        }
    }
    return s;
}

const std::vector<double>& ColumnTable::column(const std::string& name) const {
    for (std::size_t k = 0; k < names.size(); ++k) {
        if (names[k] == name) return columns[k];
    }
    throw ParseError("column '" + name + "' not found");
}

void write_columns_csv(const std::filesystem::path& path, const ColumnTable& table) {
    auto out = csv::open_output(path);
    out << "timestamp";
    for (const auto& n : table.names) out << ',' << n;
    out << '\n';
    for (std::size_t r = 0; r < table.rows(); ++r) {
        out << format_timestamp(table.start + kStep * static_cast<long>(r));
        for (const auto& col : table.columns) out << ',' << csv::format_double(col[r]);
        out << '\n';
    }
}

ColumnTable read_columns_csv(const std::filesystem::path& path) {
    const auto table = csv::read(path);
    if (table.header.empty() || table.header[0] != "timestamp") {
        throw ParseError(path.string() + ": expected a timestamp column");
    }
    ColumnTable t;
    t.start = grid_start(table, path);
    t.names.assign(table.header.begin() + 1, table.header.end());
    t.columns.assign(t.names.size(), std::vector<double>(table.rows.size()));
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        for (std::size_t c = 0; c < t.names.size(); ++c) {
            t.columns[c][r] = csv::parse_double(table.rows[r][c + 1],
                                                path.string() + ":" + std::to_string(table.line_numbers[r]));
        }
    }
    return t;
}

}  // namespace epf
