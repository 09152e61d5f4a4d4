#include "epf/common.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace epf {
namespace {

bool parse_uint(std::string_view s, int& out) {
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

Date make_date(int y, int m, int d, std::string_view text) {
    using namespace std::chrono;
    year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) throw ParseError("invalid calendar date '" + std::string(text) + "'");
    return sys_days{ymd};
}

}  // namespace

Date parse_date(std::string_view text) {
    // ISO first, then D/M/YYYY.
    if (text.size() == 10 && text[4] == '-' && text[7] == '-') {
        int y = 0, m = 0, d = 0;
        if (parse_uint(text.substr(0, 4), y) && parse_uint(text.substr(5, 2), m) &&
            parse_uint(text.substr(8, 2), d)) {
            return make_date(y, m, d, text);
        }
    }
    auto s1 = text.find('/');
    auto s2 = s1 == std::string_view::npos ? s1 : text.find('/', s1 + 1);
    if (s2 != std::string_view::npos) {
        int y = 0, m = 0, d = 0;
        if (parse_uint(text.substr(0, s1), d) && parse_uint(text.substr(s1 + 1, s2 - s1 - 1), m) &&
            parse_uint(text.substr(s2 + 1), y)) {
            return make_date(y, m, d, text);
        }
    }
    throw ParseError("malformed date '" + std::string(text) + "'");
}

Timestamp parse_timestamp(std::string_view text) {
    if (text.size() < 16 || (text[10] != ' ' && text[10] != 'T') || text[13] != ':') {
        throw ParseError("malformed timestamp '" + std::string(text) + "'");
    }
    const Date d = parse_date(text.substr(0, 10));
    int hh = 0, mm = 0, ss = 0;
    bool ok = parse_uint(text.substr(11, 2), hh) && parse_uint(text.substr(14, 2), mm);
    if (ok && text.size() > 16) {
        ok = text.size() == 19 && text[16] == ':' && parse_uint(text.substr(17, 2), ss);
    }
    if (!ok || hh > 23 || mm > 59 || ss > 59) {
        throw ParseError("malformed timestamp '" + std::string(text) + "'");
    }
    return Timestamp{d} + std::chrono::hours{hh} + std::chrono::minutes{mm} + std::chrono::seconds{ss};
}

std::string format_timestamp(Timestamp t) {
    using namespace std::chrono;
    const Date d = date_of(t);
    const year_month_day ymd{d};
    const auto tod = t - Timestamp{d};
    const auto h = duration_cast<hours>(tod).count();
    const auto m = duration_cast<minutes>(tod).count() % 60;
    const auto s = tod.count() % 60;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02ld:%02ld:%02ld", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), static_cast<long>(h),
                  static_cast<long>(m), static_cast<long>(s));
    return buf;
}

std::string format_date(Date d) {
    using namespace std::chrono;
    const year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

std::size_t interval_of_day(Timestamp t) {
    const auto tod = t - Timestamp{date_of(t)};
    return static_cast<std::size_t>(tod / kStep) + 1;
}

std::size_t day_of_week(Timestamp t) {
    const std::chrono::weekday wd{date_of(t)};
    return (wd.c_encoding() + 6) % 7;
}

QuantileSurface::QuantileSurface(Timestamp start_time, std::vector<double> lvls, std::size_t n_rows)
    : start(start_time), levels(std::move(lvls)), values(n_rows * levels.size(), 0.0) {}

std::size_t QuantileSurface::level_index(double level) const {
    for (std::size_t k = 0; k < levels.size(); ++k) {
        if (std::abs(levels[k] - level) < 1e-12) return k;
    }
    throw ArgumentError("quantile level " + std::to_string(level) + " not present in surface");
}

std::vector<double> QuantileSurface::column(std::size_t col) const {
    std::vector<double> out(rows());
    for (std::size_t r = 0; r < out.size(); ++r) out[r] = at(r, col);
    return out;
}

}  // namespace epf
