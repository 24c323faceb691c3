#include "doctest.h"

#include <sstream>

#include "sdisp/dates.hpp"
#include "sdisp/error.hpp"

using namespace sdisp;

TEST_CASE("date parsing and formatting") {
    Date d = parse_date("2020-02-29");
    CHECK(d.y == 2020);
    CHECK(d.m == 2);
    CHECK(d.d == 29);
    CHECK(format_date(d) == "2020-02-29");

    CHECK_THROWS_AS(parse_date("2021-02-29"), Error); // not a leap year
    CHECK_THROWS_AS(parse_date("2020-13-01"), Error);
    CHECK_THROWS_AS(parse_date("2020-1-01"), Error);
    CHECK_THROWS_AS(parse_date("garbage"), Error);
}

TEST_CASE("year-month parsing and arithmetic") {
    YearMonth ym = parse_year_month("2007-12");
    CHECK(format_year_month(ym) == "2007-12");
    CHECK(ym + 1 == YearMonth{2008, 1});
    CHECK(ym - 12 == YearMonth{2006, 12});
    CHECK(month_diff(YearMonth{2008, 3}, YearMonth{2007, 12}) == 3);
    CHECK_THROWS_AS(parse_year_month("2020-13"), Error);
    CHECK_THROWS_AS(parse_year_month("202-12"), Error);
}

TEST_CASE("minute parsing") {
    CHECK(parse_minute_of_day("09:30") == 570);
    CHECK(parse_minute_of_day("16:00") == 960);
    CHECK_THROWS_AS(parse_minute_of_day("24:00"), Error);
    CHECK_THROWS_AS(parse_minute_of_day("9:30"), Error);
}

TEST_CASE("trading calendar last-five selection") {
    std::vector<Date> days;
    for (int d = 1; d <= 31; ++d)
        if (d % 7 != 0) days.push_back(Date{2020, 1, uint8_t(d)}); // skip a few
    auto cal = TradingCalendar::from_days(days);

    auto last5 = cal.last_n_days_of_month(YearMonth{2020, 1}, 5);
    REQUIRE(last5.size() == 5);
    CHECK(last5.back() == Date{2020, 1, 31});
    CHECK(last5.front() == Date{2020, 1, 26});

    CHECK_THROWS_AS(cal.last_n_days_of_month(YearMonth{2020, 2}, 5), Error); // no days at all
    CHECK(cal.months() == std::vector<YearMonth>{YearMonth{2020, 1}});
}

TEST_CASE("trading calendar file with half days") {
    std::istringstream in("2020-01-02\n2020-01-03,half\n2020-01-06\n# comment\n\n2020-01-06\n");
    auto file = load_trading_calendar(in);
    CHECK(file.calendar.size() == 2); // half day excluded, duplicate collapsed
    CHECK(file.half_days.count(Date{2020, 1, 3}) == 1);
    CHECK_FALSE(file.calendar.contains(Date{2020, 1, 3}));

    std::istringstream bad("2020-01-40\n");
    CHECK_THROWS_AS(load_trading_calendar(bad), Error);
}
