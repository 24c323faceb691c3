#include "sdisp/dispersion.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "sdisp/error.hpp"
#include "sdisp/io_util.hpp"

namespace sdisp {

const char* aggregation_name(Aggregation a) { return a == Aggregation::kMean ? "mean" : "median"; }

double percentile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) raise(Errc::kDomain, "percentile of empty set");
    if (p < 0.0 || p > 100.0) raise(Errc::kDomain, "percentile level outside [0,100]");
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    const double h = 1.0 + double(n - 1) * p / 100.0; // 1-based position
    const double fl = std::floor(h);
    std::size_t lo = std::size_t(fl) - 1;
    if (lo >= n - 1) return sorted[n - 1]; // p == 100
    return sorted[lo] + (h - fl) * (sorted[lo + 1] - sorted[lo]);
}

double cross_sectional_percentile(std::span<const double> values, double p) {
    if (values.empty()) raise(Errc::kDomain, "percentile of empty set");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    return percentile_sorted(sorted, p);
}

double daily_dispersion(const CrossSectionSnapshot& snapshot, double upper_pct, double lower_pct, int min_breadth) {
    if (!(upper_pct > lower_pct)) raise(Errc::kDomain, "need upper percentile > lower percentile");
    if (int(snapshot.values.size()) < min_breadth)
        raise(Errc::kThinCrossSection, "cross-section on " + format_date(snapshot.date) + " has " +
                                           std::to_string(snapshot.values.size()) + " names, need " +
                                           std::to_string(min_breadth));
    std::vector<double> sorted(snapshot.values.begin(), snapshot.values.end());
    std::sort(sorted.begin(), sorted.end());
    return percentile_sorted(sorted, upper_pct) - percentile_sorted(sorted, lower_pct);
}

namespace {

template <bool Parallel>
std::vector<std::pair<Date, double>> dispersion_series_impl(std::span<const CrossSectionSnapshot> snapshots,
                                                            double upper_pct, double lower_pct, int min_breadth) {
    const std::size_t n = snapshots.size();
    std::vector<std::pair<Date, double>> out(n);
    std::exception_ptr eptr;
    if constexpr (Parallel) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(n); ++i) {
            try {
                out[std::size_t(i)] = {snapshots[std::size_t(i)].date,
                                       daily_dispersion(snapshots[std::size_t(i)], upper_pct, lower_pct, min_breadth)};
            } catch (...) {
#pragma omp critical
                if (!eptr) eptr = std::current_exception();
            }
        }
    } else {
        for (std::size_t i = 0; i < n; ++i)
            out[i] = {snapshots[i].date, daily_dispersion(snapshots[i], upper_pct, lower_pct, min_breadth)};
    }
    if (eptr) std::rethrow_exception(eptr);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    return out;
}

} // namespace

std::vector<std::pair<Date, double>> daily_dispersion_series(std::span<const CrossSectionSnapshot> snapshots,
                                                             double upper_pct, double lower_pct, int min_breadth) {
    return dispersion_series_impl<true>(snapshots, upper_pct, lower_pct, min_breadth);
}

std::vector<std::pair<Date, double>> daily_dispersion_series_serial(std::span<const CrossSectionSnapshot> snapshots,
                                                                    double upper_pct, double lower_pct,
                                                                    int min_breadth) {
    return dispersion_series_impl<false>(snapshots, upper_pct, lower_pct, min_breadth);
}

std::vector<std::pair<YearMonth, double>> monthly_aggregate(std::span<const std::pair<Date, double>> daily,
                                                            const TradingCalendar& calendar, Aggregation method) {
    if (daily.empty()) return {};
    std::map<Date, double> by_date(daily.begin(), daily.end());

    const YearMonth first = month_of(by_date.begin()->first);
    const YearMonth last = month_of(by_date.rbegin()->first);
    std::vector<std::pair<YearMonth, double>> out;
    for (int idx = first.index(); idx <= last.index(); ++idx) {
        const YearMonth ym = YearMonth::from_index(idx);
        const std::vector<Date> window = calendar.last_n_days_of_month(ym, 5);
        double vals[5];
        for (int i = 0; i < 5; ++i) {
            auto it = by_date.find(window[std::size_t(i)]);
            if (it == by_date.end())
                raise(Errc::kIncompleteMonth, "month " + format_year_month(ym) + " missing dispersion value on " +
                                                  format_date(window[std::size_t(i)]));
            vals[i] = it->second;
        }
        double v;
        if (method == Aggregation::kMean) {
            v = (vals[0] + vals[1] + vals[2] + vals[3] + vals[4]) / 5.0;
        } else {
            std::sort(vals, vals + 5);
            v = vals[2];
        }
        out.emplace_back(ym, v);
    }
    return out;
}

std::string DispersionSeries::name() const {
    std::ostringstream ss;
    ss << moment_name(moment) << '_' << int(upper_pct) << '_' << int(lower_pct) << '_'
       << aggregation_name(aggregation);
    return ss.str();
}

DispersionSeries build_predictor(std::span<const CrossSectionSnapshot> snapshots, Moment moment, double upper_pct,
                                 double lower_pct, Aggregation method, const TradingCalendar& calendar,
                                 int min_breadth) {
    DispersionSeries series;
    series.moment = moment;
    series.upper_pct = upper_pct;
    series.lower_pct = lower_pct;
    series.aggregation = method;
    const auto daily = daily_dispersion_series(snapshots, upper_pct, lower_pct, min_breadth);
    series.observations = monthly_aggregate(daily, calendar, method);
    return series;
}

} // namespace sdisp
