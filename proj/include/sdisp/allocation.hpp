#pragma once

#include <span>
#include <utility>
#include <vector>

#include "sdisp/dates.hpp"
#include "sdisp/ingest.hpp"
#include "sdisp/oos.hpp"

namespace sdisp {

struct AllocationConfig {
    double gamma = 3.0;
    double weight_floor = -0.5;
    double weight_cap = 1.5;
    int horizon = 1; // also the rebalancing interval, months
};

// w = (1/gamma) rhat / sigma2hat, clamped to [floor, cap].
double mv_weight(double return_forecast, double variance_forecast, const AllocationConfig& config);

// Sample variance (n-1 denominator) of the trailing `window` monthly returns,
// scaled by h. The production window is 60 months.
inline constexpr int kDefaultVarianceWindow = 60;
double variance_forecast(std::span<const double> monthly_returns, int horizon,
                         int window = kDefaultVarianceWindow);

enum class ForecastSource { kModel, kBenchmark };

struct BacktestResult {
    std::vector<std::pair<YearMonth, double>> weights;
    std::vector<double> portfolio_returns; // simple total return per period
    std::vector<double> excess_returns;    // simple excess return per period
    std::vector<std::pair<YearMonth, double>> log_wealth; // starts at (t0, 0)
    double cer_per_period = 0.0;           // on total returns
    double sharpe_annualized = 0.0;        // on excess returns
    int degenerate_variance_periods = 0;   // weight fell back to cap * sign(rhat)
    bool bankrupt = false;                 // gross return hit <= 0; wealth path truncated
    YearMonth window_first{}, window_last{};
    int horizon = 1;
};

// Walks the forecast records at the rebalance cadence h: the position set at
// origin m earns w * market and (1-w) * risk-free over (m, m+h]. Requires a
// forecast record at every rebalance date with a realized window.
BacktestResult backtest(std::span<const ForecastRecord> forecasts, ForecastSource source,
                        const MonthlyMarketSeries& market, const AllocationConfig& config);

// Fixed-weight variant (w identical every period): w = 1 is buy-and-hold,
// w = 0 the risk-free account.
BacktestResult backtest_fixed_weight(double weight, YearMonth first_origin, YearMonth last_origin,
                                     const MonthlyMarketSeries& market, const AllocationConfig& config);

// Explicit weight path: weights[i] applies over (first + i*h, first + (i+1)*h].
// Every period must fit inside the market sample.
BacktestResult backtest_weight_path(std::span<const double> weights, YearMonth first_origin,
                                    const MonthlyMarketSeries& market, const AllocationConfig& config);

// CER = mean - 0.5 gamma * sample variance, per period.
double cer(std::span<const double> portfolio_returns, double gamma);

// (CER_strategy - CER_benchmark) * 12/h in basis points. Windows must match.
double cer_gain_annualized_bps(const BacktestResult& strategy, const BacktestResult& benchmark, int horizon);

// mean/sd of per-period excess returns, annualized by sqrt(12/h).
double sharpe_annualized(std::span<const double> excess_returns, int horizon);
double sharpe_per_period(std::span<const double> excess_returns);

} // namespace sdisp
