#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace epf {

// Error hierarchy. The CLI maps ParseError/ValidationError/ArgumentError to
// exit code 2 and SolverError to exit code 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class ArgumentError : public Error {
public:
    using Error::Error;
};

class SolverError : public Error {
public:
    using Error::Error;
};

// Market time is a uniform civil grid without DST; it is stored as if it were UTC.
using Timestamp = std::chrono::sys_seconds;
using Date = std::chrono::sys_days;

inline constexpr std::chrono::seconds kStep{300};
inline constexpr std::size_t kIntervalsPerDay = 288;

/// The nine forecast quantile levels used throughout.
inline constexpr std::array<double, 9> kQuantileLevels{0.025, 0.05, 0.1, 0.25, 0.5,
                                                       0.75,  0.9,  0.95, 0.975};

/// Index of the median in kQuantileLevels.
inline constexpr std::size_t kMedianIndex = 4;

/// Parses "YYYY-MM-DD HH:MM[:SS]" or "YYYY-MM-DDTHH:MM[:SS]". Throws ParseError.
Timestamp parse_timestamp(std::string_view text);

/// Canonical "YYYY-MM-DD HH:MM:SS".
std::string format_timestamp(Timestamp t);

/// Parses "YYYY-MM-DD" (also accepts "D/M/YYYY"). Throws ParseError.
Date parse_date(std::string_view text);

std::string format_date(Date d);

inline Date date_of(Timestamp t) { return std::chrono::floor<std::chrono::days>(t); }

/// Interval-of-day index in 1..288 (1 is 00:00).
std::size_t interval_of_day(Timestamp t);

/// Monday = 0, ..., Sunday = 6.
std::size_t day_of_week(Timestamp t);

/// Per-timestamp predicted values at a fixed set of quantile levels, stored row-major.
struct QuantileSurface {
    Timestamp start{};
    std::vector<double> levels;
    std::vector<double> values;

    QuantileSurface() = default;
    QuantileSurface(Timestamp start_time, std::vector<double> lvls, std::size_t n_rows);

    [[nodiscard]] std::size_t rows() const { return levels.empty() ? 0 : values.size() / levels.size(); }
    [[nodiscard]] std::size_t cols() const { return levels.size(); }
    [[nodiscard]] Timestamp time_at(std::size_t row) const { return start + kStep * static_cast<long>(row); }

    double& at(std::size_t row, std::size_t col) { return values[row * levels.size() + col]; }
    [[nodiscard]] double at(std::size_t row, std::size_t col) const { return values[row * levels.size() + col]; }

    [[nodiscard]] std::span<const double> row(std::size_t r) const {
        return {values.data() + r * levels.size(), levels.size()};
    }
    std::span<double> row(std::size_t r) { return {values.data() + r * levels.size(), levels.size()}; }

    /// Column for a level, or throws ArgumentError when the level is not present.
    [[nodiscard]] std::size_t level_index(double level) const;
    [[nodiscard]] std::vector<double> column(std::size_t col) const;
};

/// Nine-level surface helper.
inline std::vector<double> standard_levels() { return {kQuantileLevels.begin(), kQuantileLevels.end()}; }

}  // namespace epf
