#include "doctest.h"

#include <cmath>
#include <sstream>

#include "helpers.hpp"
#include "sdisp/error.hpp"
#include "sdisp/ingest.hpp"
#include "sdisp/io_util.hpp"
#include "sdisp/synthetic.hpp"

using namespace sdisp;
using testutil::ticks;

TEST_CASE("parse_bar_file: well-formed lines come back sorted") {
    std::istringstream in("B,2020-01-02,09:35,10.5\n"
                          "A,2020-01-02,09:40,20\n"
                          "A,2020-01-02,09:30,19.5\n");
    BarParseStats stats;
    auto records = parse_bar_file(in, {}, &stats);
    REQUIRE(records.size() == 3);
    CHECK(stats.malformed_lines.empty());
    CHECK(records[0].ticker == "A");
    CHECK(records[0].minute == 570);
    CHECK(records[1].ticker == "A");
    CHECK(records[1].minute == 580);
    CHECK(records[2].ticker == "B");
}

TEST_CASE("parse_bar_file: empty file") {
    std::istringstream in("");
    BarParseStats stats;
    auto records = parse_bar_file(in, {}, &stats);
    CHECK(records.empty());
    CHECK(stats.total_lines == 0);
    CHECK(stats.malformed_lines.empty());
}

TEST_CASE("parse_bar_file: negative price counted as malformed, not dropped silently") {
    std::string text = "A,2020-01-02,09:30,10\n"
                       "A,2020-01-02,09:35,-3\n"
                       "A,2020-01-02,09:40,10.5\n";
    // Two good lines + one bad: over the 1% default threshold, so the
    // permissive option set is needed to observe the counts.
    std::istringstream in(text);
    BarFileOptions opts;
    opts.max_malformed_frac = 0.5;
    BarParseStats stats;
    auto records = parse_bar_file(in, opts, &stats);
    CHECK(records.size() == 2);
    REQUIRE(stats.malformed_lines.size() == 1);
    CHECK(stats.malformed_lines[0] == 2);

    std::istringstream strict(text);
    CHECK_THROWS_WITH_AS(static_cast<void>(parse_bar_file(strict)), doctest::Contains("malformed"), Error);
}

TEST_CASE("parse_bar_file: header is tolerated and not counted") {
    std::istringstream in("ticker,date,time,price\nA,2020-01-02,09:30,10\n");
    BarParseStats stats;
    auto records = parse_bar_file(in, {}, &stats);
    CHECK(records.size() == 1);
    CHECK(stats.total_lines == 1);
}

TEST_CASE("parse_bar_file: sub-1% malformed passes, above fails with line numbers") {
    std::ostringstream big;
    for (int i = 0; i < 200; ++i) big << "A,2020-01-02,09:30,10\n";
    big << "A,2020-01-02,bad,10\n";
    std::istringstream ok(big.str());
    BarParseStats stats;
    CHECK(parse_bar_file(ok, {}, &stats).size() == 200); // 1/201 < 1%
    CHECK(stats.malformed_lines.size() == 1);

    std::istringstream bad("A,2020-01-02,09:30,10\nA,2020-01-02,bad,10\n");
    try {
        static_cast<void>(parse_bar_file(bad));
        FAIL("expected format error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::kFormat);
        CHECK(std::string(e.what()).find("2") != std::string::npos);
    }
}

TEST_CASE("build_return_grid: previous-tick walk from the spec") {
    const Date day{2020, 1, 2};
    auto records = ticks("A", day, {{"09:31", 100.0}, {"09:33", 101.0}, {"09:41", 102.0}});
    auto grid = build_return_grid(records);
    REQUIRE(grid.returns.size() == 78);
    // Boundary prices: 09:30 anchors to the first trade (100), 09:35 -> 101,
    // 09:40 -> 101 carried, 09:45 -> 102.
    CHECK(grid.returns[0] == doctest::Approx(std::log(101.0 / 100.0)).epsilon(1e-14));
    CHECK(grid.returns[1] == 0.0);
    CHECK(grid.returns[2] == doctest::Approx(std::log(102.0 / 101.0)).epsilon(1e-14));
    for (std::size_t i = 3; i < 78; ++i) CHECK(grid.returns[i] == 0.0);
    CHECK(grid.valid_count == 2); // 09:35 and 09:45 are trade-backed
}

TEST_CASE("build_return_grid: single trade at the open") {
    auto records = ticks("A", Date{2020, 1, 2}, {{"09:30", 100.0}});
    auto grid = build_return_grid(records);
    CHECK(grid.valid_count == 1);
    for (double r : grid.returns) CHECK(r == 0.0);
}

TEST_CASE("build_return_grid: no trades is a degenerate grid") {
    std::vector<RawTickRecord> empty;
    try {
        static_cast<void>(build_return_grid(empty));
        FAIL("expected degenerate-grid error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::kDegenerate);
    }
}

TEST_CASE("build_return_grid: idempotent on its own grid prices") {
    Rng rng(11);
    const Date day{2020, 3, 5};
    std::vector<RawTickRecord> records;
    double price = 50.0;
    for (int minute = 565; minute <= 960; minute += 3 + int(rng.uniform01() * 9)) {
        price *= std::exp(0.001 * rng.normal());
        records.push_back({"A", day, minute, price});
    }
    auto grid = build_return_grid(records);

    // Rebuild the boundary prices from the returns and feed them back.
    SessionSpec session;
    std::vector<RawTickRecord> boundary_trades;
    double p = 100.0;
    boundary_trades.push_back({"A", day, session.boundary(0), p});
    for (int i = 0; i < session.n_returns(); ++i) {
        p *= std::exp(grid.returns[std::size_t(i)]);
        boundary_trades.push_back({"A", day, session.boundary(i + 1), p});
    }
    auto regrid = build_return_grid(boundary_trades);
    REQUIRE(regrid.returns.size() == grid.returns.size());
    for (std::size_t i = 0; i < grid.returns.size(); ++i)
        CHECK(regrid.returns[i] == doctest::Approx(grid.returns[i]).epsilon(1e-9));
    CHECK(regrid.valid_count == 79);
}

TEST_CASE("build_return_grid: returns telescope to close over open") {
    Rng rng(17);
    const Date day{2020, 3, 6};
    std::vector<RawTickRecord> records;
    double price = 200.0;
    double open_price = 0.0, close_price = 0.0;
    for (int minute = 540; minute <= 1000; minute += 1 + int(rng.uniform01() * 14)) {
        price *= std::exp(0.002 * rng.normal());
        records.push_back({"A", day, minute, price});
        if (minute <= 570) open_price = price;                       // last trade at or before 09:30
        if (minute <= 960) close_price = price;                      // last trade at or before 16:00
    }
    if (open_price == 0.0) open_price = records.front().price;
    auto grid = build_return_grid(records);
    double total = 0.0;
    for (double r : grid.returns) total += r;
    CHECK(std::fabs(total - std::log(close_price / open_price)) < 1e-12);
}

TEST_CASE("tick table path matches the record path") {
    const std::string text = "B,2020-01-02,09:35,10.5\n"
                             "A,2020-01-03,09:40,20\n"
                             "A,2020-01-02,09:30,19.5\n"
                             "A,2020-01-02,10:00,19.8\n";
    const std::string path = "/tmp/sdisp_test_bars.csv";
    write_file(path, text);
    TickTable table = load_bar_file(path);
    REQUIRE(table.rows.size() == 4);
    CHECK(table.tickers == std::vector<std::string>{"A", "B"});
    auto groups = group_ticker_days(table);
    REQUIRE(groups.size() == 3); // (A, 01-02), (A, 01-03), (B, 01-02)
    auto grid = build_return_grid(table, groups[0]);
    CHECK(grid.ticker == "A");
    CHECK(grid.valid_count == 2); // 09:30 and 10:00 boundaries are fresh
}

TEST_CASE("monthly series loading") {
    SUBCASE("twelve consecutive months") {
        std::ostringstream ss;
        for (int m = 1; m <= 12; ++m) ss << "2007-" << (m < 10 ? "0" : "") << m << "," << 0.01 * m << "\n";
        std::istringstream in(ss.str());
        auto series = load_predictor_series(in, "t");
        CHECK(series.observations.size() == 12);
    }
    SUBCASE("gap error names the month") {
        std::istringstream in("2007-01,1\n2007-02,1\n2007-04,1\n");
        try {
            static_cast<void>(load_predictor_series(in, "t"));
            FAIL("expected gap error");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::kGap);
            CHECK(std::string(e.what()).find("2007-03") != std::string::npos);
        }
    }
    SUBCASE("NaN is a parse error with the row number") {
        std::istringstream in("2007-01,1\n2007-02,NaN\n");
        try {
            static_cast<void>(load_predictor_series(in, "t"));
            FAIL("expected parse error");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::kParse);
            CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        }
    }
    SUBCASE("market series needs three columns and variant dispatch works") {
        std::istringstream in("2007-01,0.01,0.003\n2007-02,-0.02,0.003\n");
        auto v = load_monthly_series(in);
        REQUIRE(std::holds_alternative<MonthlyMarketSeries>(v));
        const auto& m = std::get<MonthlyMarketSeries>(v);
        CHECK(m.size() == 2);
        CHECK(m.first == YearMonth{2007, 1});
        CHECK(m.risk_free[1] == 0.003);
    }
    SUBCASE("write/reload round trip is identical") {
        auto series = testutil::predictor_from({0.125, -0.25, 0.0625}, "rt", YearMonth{2011, 4});
        std::ostringstream out;
        write_predictor_series(out, series);
        std::istringstream in(out.str());
        auto again = load_predictor_series(in, "rt");
        CHECK(again.observations == series.observations);

        auto market = testutil::market_from({0.01, -0.005}, YearMonth{2012, 1}, 0.002);
        std::ostringstream mo;
        write_market_series(mo, market);
        std::istringstream mi(mo.str());
        auto m2 = load_market_series(mi);
        CHECK(m2.first == market.first);
        CHECK(m2.log_excess_return == market.log_excess_return);
        CHECK(m2.risk_free == market.risk_free);
    }
}

TEST_CASE("event calendar loading") {
    std::istringstream in("2010-03\n2010-03\n2010-06\n2010-06\n2010-09\n2010-09\n2010-12\n2010-12\n"
                          "2011-03\n2011-03\n2011-06\n2011-06\n2011-09\n2011-09\n2011-12\n2011-12\n");
    auto cal = load_calendar(in, CalendarLabel::kFomcMeeting);
    CHECK(cal.months.size() == 8);

    std::istringstream empty("");
    CHECK(load_calendar(empty, CalendarLabel::kNberRecession).months.empty());

    std::istringstream bad("2020-13\n");
    CHECK_THROWS_AS(static_cast<void>(load_calendar(bad, CalendarLabel::kFomcMeeting)), Error);
}
