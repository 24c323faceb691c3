#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sdisp/dates.hpp"
#include "sdisp/moments.hpp"

namespace sdisp {

enum class Aggregation { kMean, kMedian };
const char* aggregation_name(Aggregation a); // "mean" / "median"

// Linear-interpolation order statistic: with sorted x_1..x_n and
// h = 1 + (n-1) p / 100, returns x_floor(h) + frac(h) (x_ceil(h) - x_floor(h)).
double cross_sectional_percentile(std::span<const double> values, double p);
double percentile_sorted(std::span<const double> sorted_values, double p); // precondition: sorted

inline constexpr int kDefaultMinBreadth = 100;

// SD^{a-b} for one day: percentile(a) - percentile(b), a > b.
double daily_dispersion(const CrossSectionSnapshot& snapshot, double upper_pct, double lower_pct,
                        int min_breadth = kDefaultMinBreadth);

// One value per snapshot date, dates ascending.
std::vector<std::pair<Date, double>> daily_dispersion_series(std::span<const CrossSectionSnapshot> snapshots,
                                                             double upper_pct, double lower_pct,
                                                             int min_breadth = kDefaultMinBreadth); // OpenMP
std::vector<std::pair<Date, double>> daily_dispersion_series_serial(std::span<const CrossSectionSnapshot> snapshots,
                                                                    double upper_pct, double lower_pct,
                                                                    int min_breadth = kDefaultMinBreadth);

struct DispersionSeries {
    Moment moment = Moment::kSkewness;
    double upper_pct = 75.0;
    double lower_pct = 25.0;
    Aggregation aggregation = Aggregation::kMean;
    std::vector<std::pair<YearMonth, double>> observations;

    std::string name() const; // e.g. "skew_75_25_mean"
};

// Monthly value = mean or median over exactly the last five trading days of
// the month per the supplied calendar. A month missing any of those five
// daily values (or having fewer than five trading days) is an error.
std::vector<std::pair<YearMonth, double>> monthly_aggregate(std::span<const std::pair<Date, double>> daily,
                                                            const TradingCalendar& calendar, Aggregation method);

DispersionSeries build_predictor(std::span<const CrossSectionSnapshot> snapshots, Moment moment, double upper_pct,
                                 double lower_pct, Aggregation method, const TradingCalendar& calendar,
                                 int min_breadth = kDefaultMinBreadth);

} // namespace sdisp
