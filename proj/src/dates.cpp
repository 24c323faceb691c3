#include "sdisp/dates.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>

#include "sdisp/error.hpp"
#include "sdisp/io_util.hpp"

namespace sdisp {

YearMonth YearMonth::from_index(int idx) {
    int y = idx / 12;
    int m = idx % 12;
    if (m < 0) {
        m += 12;
        --y;
    }
    return YearMonth{int16_t(y), uint8_t(m + 1)};
}

bool is_leap_year(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int days_in_month(int y, int m) {
    static const int lengths[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && is_leap_year(y)) return 29;
    return lengths[m - 1];
}

namespace {

bool parse_fixed_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > s.size()) return false;
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
        char c = s[i];
        if (c < '0' || c > '9') return false;
        v = v * 10 + (c - '0');
    }
    out = v;
    return true;
}

} // namespace

Date parse_date(std::string_view s) {
    int y, m, d;
    if (s.size() != 10 || s[4] != '-' || s[7] != '-' || !parse_fixed_int(s, 0, 4, y) ||
        !parse_fixed_int(s, 5, 2, m) || !parse_fixed_int(s, 8, 2, d) || m < 1 || m > 12 || d < 1 ||
        d > days_in_month(y, m))
        raise(Errc::kParse, "bad date '" + std::string(s) + "' (want YYYY-MM-DD)");
    return Date{int16_t(y), uint8_t(m), uint8_t(d)};
}

YearMonth parse_year_month(std::string_view s) {
    int y, m;
    if (s.size() != 7 || s[4] != '-' || !parse_fixed_int(s, 0, 4, y) || !parse_fixed_int(s, 5, 2, m) || m < 1 ||
        m > 12)
        raise(Errc::kParse, "bad month '" + std::string(s) + "' (want YYYY-MM)");
    return YearMonth{int16_t(y), uint8_t(m)};
}

int parse_minute_of_day(std::string_view s) {
    int h, m;
    if (s.size() != 5 || s[2] != ':' || !parse_fixed_int(s, 0, 2, h) || !parse_fixed_int(s, 3, 2, m) || h > 23 ||
        m > 59)
        raise(Errc::kParse, "bad time '" + std::string(s) + "' (want HH:MM)");
    return h * 60 + m;
}

std::string format_date(Date d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", int(d.y), int(d.m), int(d.d));
    return buf;
}

std::string format_year_month(YearMonth ym) {
    char buf[12];
    std::snprintf(buf, sizeof buf, "%04d-%02d", int(ym.y), int(ym.m));
    return buf;
}

TradingCalendar TradingCalendar::from_days(std::vector<Date> days) {
    std::sort(days.begin(), days.end());
    days.erase(std::unique(days.begin(), days.end()), days.end());
    TradingCalendar cal;
    cal.days_ = std::move(days);
    return cal;
}

bool TradingCalendar::contains(Date d) const { return std::binary_search(days_.begin(), days_.end(), d); }

std::vector<Date> TradingCalendar::last_n_days_of_month(YearMonth ym, int n) const {
    Date lo{ym.y, ym.m, 1};
    Date hi{ym.y, ym.m, uint8_t(days_in_month(ym.y, ym.m))};
    auto first = std::lower_bound(days_.begin(), days_.end(), lo);
    auto last = std::upper_bound(days_.begin(), days_.end(), hi);
    if (last - first < n)
        raise(Errc::kIncompleteMonth, "month " + format_year_month(ym) + " has only " +
                                          std::to_string(last - first) + " trading days, need " + std::to_string(n));
    return std::vector<Date>(last - n, last);
}

std::vector<YearMonth> TradingCalendar::months() const {
    std::vector<YearMonth> out;
    for (const Date& d : days_) {
        YearMonth ym = month_of(d);
        if (out.empty() || out.back() != ym) out.push_back(ym);
    }
    return out;
}

TradingCalendarFile load_trading_calendar(std::istream& in) {
    TradingCalendarFile out;
    std::vector<Date> days;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view sv = trim(line);
        if (sv.empty() || sv.front() == '#') continue;
        bool half = false;
        if (sv.size() > 5 && sv.substr(sv.size() - 5) == ",half") {
            half = true;
            sv.remove_suffix(5);
        }
        Date d;
        try {
            d = parse_date(trim(sv));
        } catch (const Error& e) {
            raise(Errc::kParse, "calendar line " + std::to_string(lineno) + ": " + e.what());
        }
        if (half)
            out.half_days.insert(d);
        else
            days.push_back(d);
    }
    out.calendar = TradingCalendar::from_days(std::move(days));
    return out;
}

} // namespace sdisp
