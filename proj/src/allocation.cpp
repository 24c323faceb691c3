#include "sdisp/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "sdisp/error.hpp"

namespace sdisp {

double mv_weight(double return_forecast, double variance_forecast, const AllocationConfig& config) {
    if (variance_forecast <= 0.0) raise(Errc::kDomain, "variance forecast must be positive");
    const double raw = return_forecast / (config.gamma * variance_forecast);
    return std::clamp(raw, config.weight_floor, config.weight_cap);
}

double variance_forecast(std::span<const double> monthly_returns, int horizon, int window) {
    const int n = int(monthly_returns.size());
    if (horizon < 1) raise(Errc::kDomain, "horizon must be >= 1");
    if (window < 2) raise(Errc::kDomain, "window must be >= 2");
    if (n < 12) raise(Errc::kInsufficientSample, "variance forecast needs at least 12 months of history");
    const int w = std::min(window, n);
    const auto tail = monthly_returns.subspan(std::size_t(n - w));
    double mean = 0.0;
    for (double r : tail) mean += r;
    mean /= w;
    double ss = 0.0;
    for (double r : tail) ss += (r - mean) * (r - mean);
    return ss / double(w - 1) * double(horizon);
}

double cer(std::span<const double> portfolio_returns, double gamma) {
    const int n = int(portfolio_returns.size());
    if (n < 2) raise(Errc::kInsufficientSample, "CER needs at least two periods");
    double mean = 0.0;
    for (double r : portfolio_returns) mean += r;
    mean /= n;
    double ss = 0.0;
    for (double r : portfolio_returns) ss += (r - mean) * (r - mean);
    const double var = ss / double(n - 1);
    return mean - 0.5 * gamma * var;
}

double sharpe_per_period(std::span<const double> excess_returns) {
    const int n = int(excess_returns.size());
    if (n < 2) raise(Errc::kInsufficientSample, "Sharpe needs at least two periods");
    double mean = 0.0;
    for (double r : excess_returns) mean += r;
    mean /= n;
    double ss = 0.0;
    for (double r : excess_returns) ss += (r - mean) * (r - mean);
    const double sd = std::sqrt(ss / double(n - 1));
    if (sd == 0.0) raise(Errc::kDegenerate, "excess returns have zero standard deviation");
    return mean / sd;
}

double sharpe_annualized(std::span<const double> excess_returns, int horizon) {
    return sharpe_per_period(excess_returns) * std::sqrt(12.0 / double(horizon));
}

namespace {

struct PeriodReturn {
    double gross_market; // G_mkt over (m, m+h]
    double gross_rf;     // G_rf over (m, m+h]
};

PeriodReturn period_gross(const MonthlyMarketSeries& market, std::size_t pos_m, int horizon) {
    double log_excess = 0.0;
    double gross_rf = 1.0;
    for (int j = 1; j <= horizon; ++j) {
        log_excess += market.log_excess_return[pos_m + std::size_t(j)];
        gross_rf *= 1.0 + market.risk_free[pos_m + std::size_t(j)];
    }
    return PeriodReturn{std::exp(log_excess) * gross_rf, gross_rf};
}

struct WalkState {
    BacktestResult result;
    double wealth = 1.0;
};

void walk_period(WalkState& st, YearMonth origin, double weight, const PeriodReturn& pr, const AllocationConfig& cfg) {
    const double gross = weight * pr.gross_market + (1.0 - weight) * pr.gross_rf;
    st.result.weights.emplace_back(origin, weight);
    st.result.portfolio_returns.push_back(gross - 1.0);
    st.result.excess_returns.push_back(weight * (pr.gross_market - pr.gross_rf));
    if (!st.result.bankrupt) {
        st.wealth *= gross;
        if (st.wealth <= 0.0) {
            st.result.bankrupt = true;
        } else {
            st.result.log_wealth.emplace_back(origin + cfg.horizon, std::log(st.wealth));
        }
    }
}

// Summary stats are best-effort on the result object; the standalone cer()
// and sharpe_* operations keep their strict error contracts.
void finish(WalkState& st, const AllocationConfig& cfg) {
    st.result.horizon = cfg.horizon;
    try {
        st.result.cer_per_period = cer(st.result.portfolio_returns, cfg.gamma);
    } catch (const Error&) {
        st.result.cer_per_period = std::numeric_limits<double>::quiet_NaN();
    }
    try {
        st.result.sharpe_annualized = sharpe_annualized(st.result.excess_returns, cfg.horizon);
    } catch (const Error&) {
        st.result.sharpe_annualized = std::numeric_limits<double>::quiet_NaN();
    }
}

} // namespace

BacktestResult backtest(std::span<const ForecastRecord> forecasts, ForecastSource source,
                        const MonthlyMarketSeries& market, const AllocationConfig& config) {
    if (forecasts.empty()) raise(Errc::kDomain, "no forecasts supplied");
    const int h = config.horizon;
    if (forecasts.front().horizon != h)
        raise(Errc::kDomain, "forecast horizon does not match the rebalancing interval");

    std::map<YearMonth, const ForecastRecord*> by_origin;
    for (const ForecastRecord& f : forecasts) by_origin.emplace(f.origin, &f);

    const YearMonth t0 = forecasts.front().origin;
    WalkState st;
    st.result.log_wealth.emplace_back(t0, 0.0);
    st.result.window_first = t0;

    YearMonth m = t0;
    bool any = false;
    while (true) {
        const auto pos = market.index_of(m);
        if (!pos || *pos + std::size_t(h) >= market.size()) break; // window ends when (m, m+h] leaves the sample
        auto it = by_origin.find(m);
        if (it == by_origin.end())
            raise(Errc::kDomain, "missing forecast at rebalance date " + format_year_month(m));
        const ForecastRecord& rec = *it->second;

        const double avg_forecast = source == ForecastSource::kModel ? rec.model : rec.benchmark;
        const double cum_forecast = avg_forecast * h;

        std::span<const double> hist(market.log_excess_return.data(), *pos + 1); // months through m
        const double var_fc = variance_forecast(hist, h);
        double w;
        if (var_fc > 0.0) {
            w = mv_weight(cum_forecast, var_fc, config);
        } else {
            // Degenerate variance history: cap-sized bet in the forecast's
            // direction rather than a mid-backtest failure.
            w = cum_forecast == 0.0 ? 0.0 : std::copysign(config.weight_cap, cum_forecast);
            ++st.result.degenerate_variance_periods;
        }
        walk_period(st, m, w, period_gross(market, *pos, h), config);
        st.result.window_last = m;
        any = true;
        m = m + h;
    }
    if (!any) raise(Errc::kInsufficientSample, "no rebalance date has a complete return window");
    finish(st, config);
    return std::move(st.result);
}

BacktestResult backtest_fixed_weight(double weight, YearMonth first_origin, YearMonth last_origin,
                                     const MonthlyMarketSeries& market, const AllocationConfig& config) {
    const int h = config.horizon;
    WalkState st;
    st.result.log_wealth.emplace_back(first_origin, 0.0);
    st.result.window_first = first_origin;
    bool any = false;
    for (YearMonth m = first_origin; m <= last_origin; m = m + h) {
        const auto pos = market.index_of(m);
        if (!pos || *pos + std::size_t(h) >= market.size()) break;
        walk_period(st, m, weight, period_gross(market, *pos, h), config);
        st.result.window_last = m;
        any = true;
    }
    if (!any) raise(Errc::kInsufficientSample, "no rebalance date has a complete return window");
    finish(st, config);
    return std::move(st.result);
}

BacktestResult backtest_weight_path(std::span<const double> weights, YearMonth first_origin,
                                    const MonthlyMarketSeries& market, const AllocationConfig& config) {
    if (weights.empty()) raise(Errc::kDomain, "empty weight path");
    const int h = config.horizon;
    WalkState st;
    st.result.log_wealth.emplace_back(first_origin, 0.0);
    st.result.window_first = first_origin;
    YearMonth m = first_origin;
    for (double w : weights) {
        const auto pos = market.index_of(m);
        if (!pos || *pos + std::size_t(h) >= market.size())
            raise(Errc::kDomain, "return window past the market sample at " + format_year_month(m));
        walk_period(st, m, w, period_gross(market, *pos, h), config);
        st.result.window_last = m;
        m = m + h;
    }
    finish(st, config);
    return std::move(st.result);
}

double cer_gain_annualized_bps(const BacktestResult& strategy, const BacktestResult& benchmark, int horizon) {
    if (strategy.window_first != benchmark.window_first || strategy.window_last != benchmark.window_last ||
        strategy.horizon != benchmark.horizon)
        raise(Errc::kDomain, "strategy and benchmark cover different out-of-sample windows");
    return (strategy.cer_per_period - benchmark.cer_per_period) * (12.0 / double(horizon)) * 1e4;
}

} // namespace sdisp
