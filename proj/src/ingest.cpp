#include "sdisp/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "sdisp/error.hpp"
#include "sdisp/io_util.hpp"

namespace sdisp {

namespace {

struct ParsedTick {
    std::string_view ticker;
    Date date;
    uint16_t minute;
    double price;
};

// One bar line: TICKER,YYYY-MM-DD,HH:MM,PRICE. Returns false on any defect
// (field count, dates, non-positive or non-finite price).
bool parse_bar_line(std::string_view line, char delim, ParsedTick& out) {
    std::size_t p1 = line.find(delim);
    if (p1 == std::string_view::npos) return false;
    std::size_t p2 = line.find(delim, p1 + 1);
    if (p2 == std::string_view::npos) return false;
    std::size_t p3 = line.find(delim, p2 + 1);
    if (p3 == std::string_view::npos) return false;
    if (line.find(delim, p3 + 1) != std::string_view::npos) return false;

    std::string_view ticker = trim(line.substr(0, p1));
    std::string_view date_s = trim(line.substr(p1 + 1, p2 - p1 - 1));
    std::string_view time_s = trim(line.substr(p2 + 1, p3 - p2 - 1));
    std::string_view price_s = line.substr(p3 + 1);

    if (ticker.empty()) return false;
    double price;
    if (!parse_double(price_s, price) || !std::isfinite(price) || price <= 0.0) return false;
    try {
        out.date = parse_date(date_s);
        out.minute = uint16_t(parse_minute_of_day(time_s));
    } catch (const Error&) {
        return false;
    }
    out.ticker = ticker;
    out.price = price;
    return true;
}

void check_malformed(const BarParseStats& stats, double max_frac) {
    if (stats.malformed_lines.empty()) return;
    double frac = double(stats.malformed_lines.size()) / double(std::max<std::size_t>(stats.total_lines, 1));
    if (frac <= max_frac) return;
    std::ostringstream msg;
    msg << stats.malformed_lines.size() << " of " << stats.total_lines << " lines malformed (limit "
        << format_num(max_frac * 100) << "%); lines:";
    std::size_t shown = 0;
    for (std::size_t ln : stats.malformed_lines) {
        msg << ' ' << ln;
        if (++shown == 20) {
            msg << " ...";
            break;
        }
    }
    raise(Errc::kFormat, msg.str());
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t nl = text.find('\n', start);
        if (nl == std::string_view::npos) nl = text.size();
        lines.push_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    return lines;
}

} // namespace

std::vector<RawTickRecord> parse_bar_file(std::istream& in, const BarFileOptions& opts, BarParseStats* stats_out) {
    std::vector<RawTickRecord> records;
    BarParseStats stats;
    std::string line;
    std::size_t lineno = 0;
    bool first_content = true;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view sv = trim(line);
        if (sv.empty()) continue;
        ParsedTick tick;
        bool ok = parse_bar_line(sv, opts.delimiter, tick);
        if (first_content) {
            first_content = false;
            if (!ok) continue; // optional header line
        }
        ++stats.total_lines;
        if (!ok) {
            stats.malformed_lines.push_back(lineno);
            continue;
        }
        ++stats.parsed;
        records.push_back(RawTickRecord{std::string(tick.ticker), tick.date, tick.minute, tick.price});
    }
    if (in.bad()) raise(Errc::kIo, "read failure while parsing bar file");
    check_malformed(stats, opts.max_malformed_frac);
    std::stable_sort(records.begin(), records.end(), [](const RawTickRecord& a, const RawTickRecord& b) {
        if (a.ticker != b.ticker) return a.ticker < b.ticker;
        if (a.date != b.date) return a.date < b.date;
        return a.minute < b.minute;
    });
    if (stats_out) *stats_out = std::move(stats);
    return records;
}

TickTable load_bar_file(const std::string& path, const BarFileOptions& opts) {
    const std::string text = read_file(path);
    const std::vector<std::string_view> lines = split_lines(text);
    const std::size_t n_lines = lines.size();

    TickTable table;

    // Header probe: a first content line that does not parse is treated as a
    // header and skipped without counting.
    std::size_t first_data = 0;
    while (first_data < n_lines && trim(lines[first_data]).empty()) ++first_data;
    if (first_data < n_lines) {
        ParsedTick probe;
        if (!parse_bar_line(trim(lines[first_data]), opts.delimiter, probe)) ++first_data;
    }

    int n_threads = 1;
#ifdef _OPENMP
    n_threads = std::max(1, omp_get_max_threads());
#endif
    struct Shard {
        std::vector<TickTable::Row> rows;
        std::vector<std::string> tickers; // local id -> symbol
        std::map<std::string, uint32_t, std::less<>> intern;
        std::vector<std::size_t> malformed;
        std::size_t total = 0;
    };
    std::vector<Shard> shards(static_cast<std::size_t>(n_threads));

#pragma omp parallel num_threads(n_threads)
    {
#ifdef _OPENMP
        Shard& shard = shards[std::size_t(omp_get_thread_num())];
#else
        Shard& shard = shards[0];
#endif
#pragma omp for schedule(static)
        for (std::ptrdiff_t i = std::ptrdiff_t(first_data); i < std::ptrdiff_t(n_lines); ++i) {
            std::string_view sv = trim(lines[std::size_t(i)]);
            if (sv.empty()) continue;
            ++shard.total;
            ParsedTick tick;
            if (!parse_bar_line(sv, opts.delimiter, tick)) {
                shard.malformed.push_back(std::size_t(i) + 1);
                continue;
            }
            auto it = shard.intern.find(tick.ticker);
            uint32_t local_id;
            if (it == shard.intern.end()) {
                local_id = uint32_t(shard.tickers.size());
                shard.tickers.emplace_back(tick.ticker);
                shard.intern.emplace(shard.tickers.back(), local_id);
            } else {
                local_id = it->second;
            }
            shard.rows.push_back(TickTable::Row{local_id, tick.date, tick.minute, tick.price});
        }
    }

    // Merge ticker tables into one sorted global table, then remap.
    std::vector<std::string> all;
    for (const Shard& s : shards) all.insert(all.end(), s.tickers.begin(), s.tickers.end());
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    table.tickers = std::move(all);

    std::size_t total_rows = 0;
    for (const Shard& s : shards) total_rows += s.rows.size();
    table.rows.reserve(total_rows);
    for (Shard& s : shards) {
        std::vector<uint32_t> remap(s.tickers.size());
        for (std::size_t i = 0; i < s.tickers.size(); ++i) {
            auto it = std::lower_bound(table.tickers.begin(), table.tickers.end(), s.tickers[i]);
            remap[i] = uint32_t(it - table.tickers.begin());
        }
        for (TickTable::Row row : s.rows) {
            row.ticker_id = remap[row.ticker_id];
            table.rows.push_back(row);
        }
        table.stats.total_lines += s.total;
        table.stats.malformed_lines.insert(table.stats.malformed_lines.end(), s.malformed.begin(),
                                           s.malformed.end());
    }
    std::sort(table.stats.malformed_lines.begin(), table.stats.malformed_lines.end());
    table.stats.parsed = table.rows.size();
    check_malformed(table.stats, opts.max_malformed_frac);

    auto row_less = [](const TickTable::Row& a, const TickTable::Row& b) {
        if (a.ticker_id != b.ticker_id) return a.ticker_id < b.ticker_id;
        if (a.date != b.date) return a.date < b.date;
        return a.minute < b.minute;
    };
    if (!std::is_sorted(table.rows.begin(), table.rows.end(), row_less))
        std::stable_sort(table.rows.begin(), table.rows.end(), row_less);
    return table;
}

std::vector<TickGroup> group_ticker_days(const TickTable& table) {
    std::vector<TickGroup> groups;
    std::size_t i = 0;
    const std::size_t n = table.rows.size();
    while (i < n) {
        std::size_t j = i;
        while (j < n && table.rows[j].ticker_id == table.rows[i].ticker_id && table.rows[j].date == table.rows[i].date)
            ++j;
        groups.push_back(TickGroup{table.rows[i].ticker_id, table.rows[i].date, i, j});
        i = j;
    }
    return groups;
}

namespace {

// Previous-tick sampling over one ticker-day. Ticks must be time-sorted.
IntradayReturnGrid build_grid_core(std::string ticker, Date date,
                                   std::span<const std::pair<int, double>> ticks, const SessionSpec& session) {
    if (ticks.empty())
        raise(Errc::kDegenerate, "no trades for " + ticker + " on " + format_date(date));
    const int n_points = session.n_points();
    std::vector<double> prices(static_cast<std::size_t>(n_points));
    int valid = 0;
    std::size_t j = 0;
    double last_price = 0.0;
    bool seen = false;
    for (int i = 0; i < n_points; ++i) {
        const int boundary = session.boundary(i);
        bool fresh = false;
        while (j < ticks.size() && ticks[j].first <= boundary) {
            last_price = ticks[j].second;
            seen = true;
            fresh = true;
            ++j;
        }
        // Boundaries before the first trade carry that trade's price and do
        // not count as valid.
        prices[std::size_t(i)] = seen ? last_price : ticks.front().second;
        if (fresh) ++valid;
    }
    IntradayReturnGrid grid;
    grid.ticker = std::move(ticker);
    grid.date = date;
    grid.valid_count = valid;
    grid.returns.resize(std::size_t(session.n_returns()));
    for (int i = 0; i < session.n_returns(); ++i)
        grid.returns[std::size_t(i)] = std::log(prices[std::size_t(i) + 1] / prices[std::size_t(i)]);
    return grid;
}

} // namespace

IntradayReturnGrid build_return_grid(std::span<const RawTickRecord> records, const SessionSpec& session) {
    if (records.empty()) raise(Errc::kDegenerate, "no trades in session");
    std::vector<std::pair<int, double>> ticks;
    ticks.reserve(records.size());
    for (const RawTickRecord& r : records) {
        if (r.ticker != records.front().ticker || r.date != records.front().date)
            raise(Errc::kDomain, "records span more than one ticker-day");
        ticks.emplace_back(r.minute, r.price);
    }
    if (!std::is_sorted(ticks.begin(), ticks.end(),
                        [](const auto& a, const auto& b) { return a.first < b.first; }))
        raise(Errc::kDomain, "records not time-sorted");
    return build_grid_core(records.front().ticker, records.front().date, ticks, session);
}

IntradayReturnGrid build_return_grid(const TickTable& table, const TickGroup& group, const SessionSpec& session) {
    std::vector<std::pair<int, double>> ticks;
    ticks.reserve(group.end - group.begin);
    for (std::size_t i = group.begin; i < group.end; ++i)
        ticks.emplace_back(table.rows[i].minute, table.rows[i].price);
    return build_grid_core(table.tickers[group.ticker_id], group.date, ticks, session);
}

// ---------------------------------------------------------------------------
// Monthly series
// ---------------------------------------------------------------------------

namespace {

struct MonthlyRows {
    std::vector<YearMonth> months;
    std::vector<std::vector<double>> values; // one vector per value column
    std::size_t n_cols = 0;
};

MonthlyRows load_monthly_rows(std::istream& in) {
    MonthlyRows out;
    std::string line;
    std::size_t lineno = 0;
    bool first_content = true;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view sv = trim(line);
        if (sv.empty() || sv.front() == '#') continue;
        std::vector<std::string_view> fields = split(sv, ',');
        if (first_content) {
            first_content = false;
            // Optional header: skip if the month column does not parse.
            bool header = true;
            try {
                parse_year_month(trim(fields[0]));
                header = false;
            } catch (const Error&) {
            }
            if (header) continue;
            if (fields.size() < 2 || fields.size() > 3)
                raise(Errc::kParse, "line " + std::to_string(lineno) + ": want 2 or 3 columns, got " +
                                        std::to_string(fields.size()));
            out.n_cols = fields.size() - 1;
            out.values.resize(out.n_cols);
        }
        if (fields.size() != out.n_cols + 1)
            raise(Errc::kParse, "line " + std::to_string(lineno) + ": expected " + std::to_string(out.n_cols + 1) +
                                    " columns, got " + std::to_string(fields.size()));
        YearMonth ym;
        try {
            ym = parse_year_month(trim(fields[0]));
        } catch (const Error& e) {
            raise(Errc::kParse, "line " + std::to_string(lineno) + ": " + e.what());
        }
        if (!out.months.empty() && ym <= out.months.back())
            raise(Errc::kFormat, "line " + std::to_string(lineno) + ": months not strictly increasing at " +
                                     format_year_month(ym));
        for (std::size_t c = 0; c < out.n_cols; ++c) {
            double v;
            if (!parse_double(fields[c + 1], v) || !std::isfinite(v))
                raise(Errc::kParse, "line " + std::to_string(lineno) + ": bad numeric value '" +
                                        std::string(trim(fields[c + 1])) + "'");
            out.values[c].push_back(v);
        }
        out.months.push_back(ym);
    }
    if (in.bad()) raise(Errc::kIo, "read failure while parsing monthly series");
    // Gap check: every month between first and last must be present.
    std::vector<YearMonth> missing;
    for (std::size_t i = 1; i < out.months.size(); ++i)
        for (int idx = out.months[i - 1].index() + 1; idx < out.months[i].index(); ++idx)
            missing.push_back(YearMonth::from_index(idx));
    if (!missing.empty()) {
        std::ostringstream msg;
        msg << "missing months:";
        for (std::size_t i = 0; i < missing.size() && i < 12; ++i) msg << ' ' << format_year_month(missing[i]);
        if (missing.size() > 12) msg << " ...";
        raise(Errc::kGap, msg.str());
    }
    return out;
}

} // namespace

MonthlyMarketSeries load_market_series(std::istream& in) {
    MonthlyRows rows = load_monthly_rows(in);
    if (rows.n_cols != 2) raise(Errc::kParse, "market series needs YYYY-MM,excess,risk_free rows");
    MonthlyMarketSeries s;
    if (!rows.months.empty()) s.first = rows.months.front();
    s.log_excess_return = std::move(rows.values[0]);
    s.risk_free = std::move(rows.values[1]);
    return s;
}

MonthlyPredictorSeries load_predictor_series(std::istream& in, const std::string& name) {
    MonthlyRows rows = load_monthly_rows(in);
    if (rows.n_cols != 1) raise(Errc::kParse, "predictor series needs YYYY-MM,value rows");
    MonthlyPredictorSeries s;
    s.name = name;
    s.observations.reserve(rows.months.size());
    for (std::size_t i = 0; i < rows.months.size(); ++i) s.observations.emplace_back(rows.months[i], rows.values[0][i]);
    return s;
}

std::variant<MonthlyMarketSeries, MonthlyPredictorSeries> load_monthly_series(std::istream& in,
                                                                              const std::string& name) {
    MonthlyRows rows = load_monthly_rows(in);
    if (rows.n_cols == 2) {
        MonthlyMarketSeries s;
        if (!rows.months.empty()) s.first = rows.months.front();
        s.log_excess_return = std::move(rows.values[0]);
        s.risk_free = std::move(rows.values[1]);
        return s;
    }
    MonthlyPredictorSeries s;
    s.name = name;
    for (std::size_t i = 0; i < rows.months.size(); ++i) s.observations.emplace_back(rows.months[i], rows.values[0][i]);
    return s;
}

std::optional<std::size_t> MonthlyMarketSeries::index_of(YearMonth ym) const {
    int offset = month_diff(ym, first);
    if (offset < 0 || std::size_t(offset) >= size()) return std::nullopt;
    return std::size_t(offset);
}

void write_market_series(std::ostream& out, const MonthlyMarketSeries& s) {
    for (std::size_t i = 0; i < s.size(); ++i)
        out << format_year_month(s.month_at(i)) << ',' << format_num(s.log_excess_return[i]) << ','
            << format_num(s.risk_free[i]) << '\n';
}

void write_predictor_series(std::ostream& out, const MonthlyPredictorSeries& s) {
    for (const auto& [ym, v] : s.observations) out << format_year_month(ym) << ',' << format_num(v) << '\n';
}

EventCalendar load_calendar(std::istream& in, CalendarLabel label) {
    EventCalendar cal;
    cal.label = label;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view sv = trim(line);
        if (sv.empty() || sv.front() == '#') continue;
        try {
            cal.months.insert(parse_year_month(sv));
        } catch (const Error& e) {
            raise(Errc::kParse, "calendar line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (in.bad()) raise(Errc::kIo, "read failure while parsing calendar");
    return cal;
}

void write_calendar(std::ostream& out, const EventCalendar& cal) {
    for (YearMonth ym : cal.months) out << format_year_month(ym) << '\n';
}

} // namespace sdisp
