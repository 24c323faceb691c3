#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace sdisp {

// Calendar date (proleptic Gregorian). Comparison is lexicographic y/m/d.
struct Date {
    int16_t y = 0;
    uint8_t m = 0; // 1..12
    uint8_t d = 0; // 1..31

    auto operator<=>(const Date&) const = default;
};

struct YearMonth {
    int16_t y = 0;
    uint8_t m = 0; // 1..12

    auto operator<=>(const YearMonth&) const = default;

    // Months since year 0, used for arithmetic on month grids.
    int index() const { return int(y) * 12 + int(m) - 1; }
    static YearMonth from_index(int idx);
};

inline YearMonth operator+(YearMonth ym, int months) { return YearMonth::from_index(ym.index() + months); }
inline YearMonth operator-(YearMonth ym, int months) { return ym + (-months); }
inline int month_diff(YearMonth a, YearMonth b) { return a.index() - b.index(); } // a - b

inline YearMonth month_of(Date d) { return YearMonth{d.y, d.m}; }

bool is_leap_year(int y);
int days_in_month(int y, int m);

// Strict parsers: throw Error(kParse) on anything malformed.
Date parse_date(std::string_view s);          // "YYYY-MM-DD"
YearMonth parse_year_month(std::string_view); // "YYYY-MM"
int parse_minute_of_day(std::string_view);    // "HH:MM" -> minutes since midnight

std::string format_date(Date d);
std::string format_year_month(YearMonth ym);

// An explicit exchange calendar: the ordered set of trading days. Month
// identity ("last five trading days") is always resolved against this, never
// against civil dates.
class TradingCalendar {
public:
    TradingCalendar() = default;
    static TradingCalendar from_days(std::vector<Date> days); // sorted + deduplicated

    bool empty() const { return days_.empty(); }
    std::size_t size() const { return days_.size(); }
    const std::vector<Date>& days() const { return days_; }
    bool contains(Date d) const;

    // The last n trading days of a month, oldest first. Throws
    // Error(kIncompleteMonth) if the month has fewer than n days.
    std::vector<Date> last_n_days_of_month(YearMonth ym, int n) const;

    // Months that have at least one trading day, ascending.
    std::vector<YearMonth> months() const;

private:
    std::vector<Date> days_;
};

// Calendar file: one "YYYY-MM-DD" per line; an optional ",half" suffix marks
// an early close. Half days are excluded from the returned calendar and
// reported separately.
struct TradingCalendarFile {
    TradingCalendar calendar;
    std::set<Date> half_days;
};
TradingCalendarFile load_trading_calendar(std::istream& in);

} // namespace sdisp
