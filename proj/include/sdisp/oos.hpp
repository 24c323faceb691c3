#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "sdisp/dates.hpp"
#include "sdisp/regression.hpp"

namespace sdisp {

struct ForecastRecord {
    YearMonth origin{};   // m: forecasts are formed with data through m
    int horizon = 1;
    double model = 0.0;     // alpha + beta * x_m (expanding-window fit)
    double benchmark = 0.0; // historical average of r_{t,t+h} through m
    std::optional<double> realized; // r_{m,m+h}, absent past the sample end
};

// Expanding-window forecasts from t0 (the first estimation endpoint; the
// first forecast realizes at t0+h). Coefficients for origin m use only
// predictor/return pairs fully realized by m — no look-ahead. Pass a control
// to use the bivariate model.
std::vector<ForecastRecord> expanding_forecasts(const MonthlySeriesView& predictor,
                                                const std::optional<MonthlySeriesView>& control,
                                                const MonthlyMarketSeries& market, int horizon,
                                                YearMonth t0); // OpenMP over origins
std::vector<ForecastRecord> expanding_forecasts_serial(const MonthlySeriesView& predictor,
                                                       const std::optional<MonthlySeriesView>& control,
                                                       const MonthlyMarketSeries& market, int horizon, YearMonth t0);

inline constexpr int kMinRealizedForecasts = 12;

// 1 - MSFE_model / MSFE_benchmark over realized records.
double r2_oos(std::span<const ForecastRecord> forecasts);

// MSPE-adjusted (Clark-West) t-statistic: mean of
// f_t = (r - rB)^2 - [(r - rL)^2 - (rB - rL)^2] tested against zero with
// Bartlett HAC (h-1 lags); the alternative is one-sided (model better).
double clark_west(std::span<const ForecastRecord> forecasts, int horizon);

// Running sum of (benchmark SE - model SE); final value = n (MSFE_B - MSFE_L).
std::vector<std::pair<YearMonth, double>> cumulative_sse_diff(std::span<const ForecastRecord> forecasts);

struct EncompassingResult {
    double lambda = 0.0; // weight on the SD forecast in the optimal convex combination
    double tstat = 0.0;  // HLN small-sample-corrected mean test on d_t
    int n = 0;
};

// Forecast encompassing of the control by the SD model: with errors
// e_c, e_sd, lambda = sum((e_c - e_sd) e_c) / sum((e_c - e_sd)^2), truncated
// to [0,1]. Records are matched on origin month; only realized pairs enter.
EncompassingResult encompassing_test(std::span<const ForecastRecord> control_forecasts,
                                     std::span<const ForecastRecord> sd_forecasts, int horizon);

} // namespace sdisp
