#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sdisp/dates.hpp"

namespace sdisp {

// ---------------------------------------------------------------------------
// Raw ticks and the intraday grid
// ---------------------------------------------------------------------------

struct RawTickRecord {
    std::string ticker;
    Date date;
    int minute = 0; // minutes since midnight, exchange local time
    double price = 0.0;
};

struct BarFileOptions {
    char delimiter = ',';
    // Fraction of malformed lines tolerated before the file is rejected.
    double max_malformed_frac = 0.01;
};

struct BarParseStats {
    std::size_t total_lines = 0; // non-empty, non-header lines
    std::size_t parsed = 0;
    std::vector<std::size_t> malformed_lines; // 1-based line numbers
};

// Parses a bar file (TICKER,YYYY-MM-DD,HH:MM,PRICE; header optional).
// Records come back sorted by (ticker, date, minute). Malformed lines are
// counted, never silently dropped; more than max_malformed_frac of them is a
// format error listing the offending line numbers.
std::vector<RawTickRecord> parse_bar_file(std::istream& in, const BarFileOptions& opts = {},
                                          BarParseStats* stats = nullptr);

// Trading session on a fixed grid: boundaries open, open+step, ..., close.
struct SessionSpec {
    int open_minute = 9 * 60 + 30; // 09:30
    int close_minute = 16 * 60;    // 16:00
    int step_minutes = 5;

    int n_returns() const { return (close_minute - open_minute) / step_minutes; } // 78
    int n_points() const { return n_returns() + 1; }
    int boundary(int i) const { return open_minute + i * step_minutes; }
};

struct IntradayReturnGrid {
    std::string ticker;
    Date date;
    std::vector<double> returns; // n_returns() log returns
    int valid_count = 0;         // grid points backed by a trade in their own interval
};

// Previous-tick sampling: each boundary takes the last trade at or before it;
// boundaries before the first trade of the day carry that first trade's price
// and do not count as valid. Records must be one ticker-day, time-sorted.
// Throws Error(kDegenerate) when there are no trades at all.
IntradayReturnGrid build_return_grid(std::span<const RawTickRecord> records, const SessionSpec& session = {});

// Liquidity floor: a stock-day enters the moment panel only with at least
// this many trade-backed grid points.
inline constexpr int kDefaultMinValidCount = 10;

// ---------------------------------------------------------------------------
// Column-oriented tick storage for large files
// ---------------------------------------------------------------------------

// parse_bar_file keeps the spec's record-sequence contract; TickTable is the
// compact path the CLI uses for multi-million-line files. Same line parser,
// ticker symbols interned against a sorted table so output order never
// depends on thread scheduling.
struct TickTable {
    struct Row {
        uint32_t ticker_id;
        Date date;
        uint16_t minute;
        double price;
    };
    std::vector<std::string> tickers; // id -> symbol, sorted unique
    std::vector<Row> rows;            // sorted by (ticker_id, date, minute)
    BarParseStats stats;
};

TickTable load_bar_file(const std::string& path, const BarFileOptions& opts = {});

struct TickGroup {
    uint32_t ticker_id;
    Date date;
    std::size_t begin, end; // row range [begin, end)
};
std::vector<TickGroup> group_ticker_days(const TickTable& table);

IntradayReturnGrid build_return_grid(const TickTable& table, const TickGroup& group,
                                     const SessionSpec& session = {});

// ---------------------------------------------------------------------------
// Monthly series and event calendars
// ---------------------------------------------------------------------------

struct MonthlyMarketSeries {
    YearMonth first{};
    std::vector<double> log_excess_return; // r_t
    std::vector<double> risk_free;         // simple per-month rate

    std::size_t size() const { return log_excess_return.size(); }
    YearMonth month_at(std::size_t i) const { return first + int(i); }
    YearMonth last() const { return first + int(size()) - 1; }
    std::optional<std::size_t> index_of(YearMonth ym) const;
};

struct MonthlyPredictorSeries {
    std::string name;
    std::vector<std::pair<YearMonth, double>> observations; // strictly increasing months
};

// Two columns -> predictor, three columns -> market. Gap-checked: a missing
// month inside the covered range is an error naming the months.
std::variant<MonthlyMarketSeries, MonthlyPredictorSeries> load_monthly_series(std::istream& in,
                                                                              const std::string& name = "");
MonthlyMarketSeries load_market_series(std::istream& in);
MonthlyPredictorSeries load_predictor_series(std::istream& in, const std::string& name);

void write_market_series(std::ostream& out, const MonthlyMarketSeries& s);
void write_predictor_series(std::ostream& out, const MonthlyPredictorSeries& s);

enum class CalendarLabel { kNberRecession, kFomcMeeting, kSentimentHigh, kSentimentLow };

struct EventCalendar {
    CalendarLabel label = CalendarLabel::kNberRecession;
    std::set<YearMonth> months;
};

// One "YYYY-MM" per line, duplicates collapsed.
EventCalendar load_calendar(std::istream& in, CalendarLabel label);
void write_calendar(std::ostream& out, const EventCalendar& cal);

} // namespace sdisp
